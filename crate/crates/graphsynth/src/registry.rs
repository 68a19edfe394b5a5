//! Name-keyed registry of generator factories.
//!
//! Property and structure generators are interchangeable strategies behind
//! their traits; the schema references them by name and the registry
//! instantiates them at execution time. Users embedding the library can
//! register their own factories next to the built-ins.

use std::collections::BTreeMap;

use crate::propgen::{
    GenError, PropFactoryContext, PropertyGenerator, PropertyGeneratorFactory,
};
use crate::schema::{GeneratorBinding, KnownGenerators};
use crate::structgen::{
    StructFactoryContext, StructGenError, StructureGenerator, StructureGeneratorFactory,
};

pub struct Registry {
    property: BTreeMap<&'static str, Box<dyn PropertyGeneratorFactory>>,
    structure: BTreeMap<&'static str, Box<dyn StructureGeneratorFactory>>,
}

impl Registry {
    pub fn empty() -> Self {
        Self { property: BTreeMap::new(), structure: BTreeMap::new() }
    }

    /// The registry with every built-in generator installed.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        for factory in crate::propgen::register_builtins() {
            registry.register_property(factory);
        }
        for factory in crate::structgen::register_builtins() {
            registry.register_structure(factory);
        }
        registry
    }

    pub fn register_property(&mut self, factory: Box<dyn PropertyGeneratorFactory>) {
        self.property.insert(factory.name(), factory);
    }

    pub fn register_structure(&mut self, factory: Box<dyn StructureGeneratorFactory>) {
        self.structure.insert(factory.name(), factory);
    }

    /// Name sets for schema validation.
    pub fn known(&self) -> KnownGenerators {
        KnownGenerators {
            property: self.property.keys().map(|s| s.to_string()).collect(),
            structure: self.structure.keys().map(|s| s.to_string()).collect(),
        }
    }

    pub fn create_property(
        &self,
        binding: &GeneratorBinding,
        ctx: &PropFactoryContext<'_>,
    ) -> Result<Box<dyn PropertyGenerator>, GenError> {
        self.property
            .get(binding.generator_name.as_str())
            .ok_or_else(|| GenError::UnknownGenerator(binding.generator_name.clone()))?
            .create(ctx)
    }

    pub fn create_structure(
        &self,
        binding: &GeneratorBinding,
        ctx: &StructFactoryContext<'_>,
    ) -> Result<Box<dyn StructureGenerator>, StructGenError> {
        self.structure
            .get(binding.generator_name.as_str())
            .ok_or_else(|| StructGenError::UnknownGenerator(binding.generator_name.clone()))?
            .create(ctx)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins()
    }
}
