//! The built-in property generator library.
//!
//! | name         | output   | deps | parameters                         |
//! |--------------|----------|------|------------------------------------|
//! | `dictionary` | string   | 0    | `file` (CSV `value,weight`)        |
//! | `conditional`| string   | k    | `file` (CSV `dep...,value,weight`) |
//! | `uniformInt` | integer  | 0    | `lo`, `hi` (inclusive)             |
//! | `uuid`       | string   | 0    | —                                  |
//! | `date`       | date     | 0    | `lo`, `hi` (ISO dates, inclusive)  |
//! | `after`      | date/int | ≥1   | `min`, `max` (positive delta)      |

use std::sync::atomic::{AtomicU64, Ordering};

use chrono::{Duration, NaiveDate};

use super::dictionary::{ConditionalDictionary, WeightedDictionary};
use super::{param_err, GenError, PropFactoryContext, PropertyGenerator, PropertyGeneratorFactory};
use crate::params::{ParamError, ParamReader};
use crate::rng::to_unit;
use crate::store::{Value, ValueType};

/// Unbiased reduction of a draw to `[0, bound)`.
fn bounded(draw: u64, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    ((u128::from(draw) * u128::from(bound)) >> 64) as u64
}

fn expect_output(name: &str, declared: ValueType, produced: ValueType) -> Result<(), GenError> {
    if declared == produced {
        Ok(())
    } else {
        Err(GenError::OutputType { generator: name.to_string(), declared })
    }
}

// ---------------------------------------------------------------- dictionary

struct DictionaryGen {
    dict: WeightedDictionary,
}

impl PropertyGenerator for DictionaryGen {
    fn dependency_arity(&self) -> usize {
        0
    }

    fn output_type(&self) -> ValueType {
        ValueType::Str
    }

    fn run(&self, _id: u64, draw: u64, _deps: &[Value]) -> Result<Value, GenError> {
        Ok(Value::Str(self.dict.sample(to_unit(draw)).to_string()))
    }
}

pub struct DictionaryFactory;

impl PropertyGeneratorFactory for DictionaryFactory {
    fn name(&self) -> &'static str {
        "dictionary"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        expect_output(self.name(), ctx.declared, ValueType::Str)?;
        let mut r = ParamReader::new(ctx.params);
        let path = r.require_path("file", ctx.base_dir).map_err(|e| param_err(self.name(), e))?;
        r.finish().map_err(|e| param_err(self.name(), e))?;
        Ok(Box::new(DictionaryGen { dict: WeightedDictionary::read_csv(&path)? }))
    }
}

// --------------------------------------------------------------- conditional

struct ConditionalGen {
    dict: ConditionalDictionary,
    fallback_uses: AtomicU64,
}

impl PropertyGenerator for ConditionalGen {
    fn dependency_arity(&self) -> usize {
        self.dict.arity()
    }

    fn output_type(&self) -> ValueType {
        ValueType::Str
    }

    fn run(&self, _id: u64, draw: u64, deps: &[Value]) -> Result<Value, GenError> {
        let key: Vec<String> = deps.iter().map(|v| v.to_string()).collect();
        let (value, used_fallback) = self.dict.sample(&key, to_unit(draw));
        if used_fallback {
            self.fallback_uses.fetch_add(1, Ordering::Relaxed);
        }
        Ok(Value::Str(value.to_string()))
    }

    fn fallback_uses(&self) -> u64 {
        self.fallback_uses.load(Ordering::Relaxed)
    }
}

pub struct ConditionalFactory;

impl PropertyGeneratorFactory for ConditionalFactory {
    fn name(&self) -> &'static str {
        "conditional"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        expect_output(self.name(), ctx.declared, ValueType::Str)?;
        let mut r = ParamReader::new(ctx.params);
        let path = r.require_path("file", ctx.base_dir).map_err(|e| param_err(self.name(), e))?;
        r.finish().map_err(|e| param_err(self.name(), e))?;
        let dict = ConditionalDictionary::read_csv(&path)?;
        if dict.arity() != ctx.dep_types.len() {
            return Err(GenError::DepArity {
                generator: self.name().to_string(),
                expected: dict.arity(),
                got: ctx.dep_types.len(),
            });
        }
        Ok(Box::new(ConditionalGen { dict, fallback_uses: AtomicU64::new(0) }))
    }
}

// ---------------------------------------------------------------- uniformInt

struct UniformIntGen {
    lo: i64,
    span: u64, // hi - lo + 1
}

impl PropertyGenerator for UniformIntGen {
    fn dependency_arity(&self) -> usize {
        0
    }

    fn output_type(&self) -> ValueType {
        ValueType::Int
    }

    fn run(&self, _id: u64, draw: u64, _deps: &[Value]) -> Result<Value, GenError> {
        Ok(Value::Int(self.lo.wrapping_add(bounded(draw, self.span) as i64)))
    }
}

pub struct UniformIntFactory;

impl PropertyGeneratorFactory for UniformIntFactory {
    fn name(&self) -> &'static str {
        "uniformInt"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        expect_output(self.name(), ctx.declared, ValueType::Int)?;
        let mut r = ParamReader::new(ctx.params);
        let lo = r.i64("lo").map_err(|e| param_err(self.name(), e))?.unwrap_or(0);
        let hi = r.i64("hi").map_err(|e| param_err(self.name(), e))?;
        let hi = hi.ok_or_else(|| param_err(self.name(), ParamError::Missing("hi")))?;
        r.finish().map_err(|e| param_err(self.name(), e))?;
        if lo > hi {
            return Err(param_err(
                self.name(),
                ParamError::Invalid { key: "lo".into(), reason: format!("lo {lo} > hi {hi}") },
            ));
        }
        let span = (hi as i128 - lo as i128 + 1) as u64;
        Ok(Box::new(UniformIntGen { lo, span }))
    }
}

// ---------------------------------------------------------------------- uuid

struct UuidGen;

impl PropertyGenerator for UuidGen {
    fn dependency_arity(&self) -> usize {
        0
    }

    fn output_type(&self) -> ValueType {
        ValueType::Str
    }

    fn run(&self, id: u64, _draw: u64, _deps: &[Value]) -> Result<Value, GenError> {
        Ok(Value::Str(id.to_string()))
    }
}

pub struct UuidFactory;

impl PropertyGeneratorFactory for UuidFactory {
    fn name(&self) -> &'static str {
        "uuid"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        expect_output(self.name(), ctx.declared, ValueType::Str)?;
        ParamReader::new(ctx.params).finish().map_err(|e| param_err(self.name(), e))?;
        Ok(Box::new(UuidGen))
    }
}

// ---------------------------------------------------------------------- date

struct DateGen {
    lo: NaiveDate,
    span_days: u64,
}

impl PropertyGenerator for DateGen {
    fn dependency_arity(&self) -> usize {
        0
    }

    fn output_type(&self) -> ValueType {
        ValueType::Date
    }

    fn run(&self, _id: u64, draw: u64, _deps: &[Value]) -> Result<Value, GenError> {
        Ok(Value::Date(self.lo + Duration::days(bounded(draw, self.span_days) as i64)))
    }
}

pub struct DateFactory;

fn parse_date(name: &str, key: &'static str, text: &str) -> Result<NaiveDate, GenError> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| {
        param_err(
            name,
            ParamError::Invalid {
                key: key.into(),
                reason: format!("expected an ISO date (YYYY-MM-DD), got {text:?}"),
            },
        )
    })
}

impl PropertyGeneratorFactory for DateFactory {
    fn name(&self) -> &'static str {
        "date"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        expect_output(self.name(), ctx.declared, ValueType::Date)?;
        let mut r = ParamReader::new(ctx.params);
        let lo = r.require_text("lo").map_err(|e| param_err(self.name(), e))?;
        let hi = r.require_text("hi").map_err(|e| param_err(self.name(), e))?;
        r.finish().map_err(|e| param_err(self.name(), e))?;
        let lo = parse_date(self.name(), "lo", &lo)?;
        let hi = parse_date(self.name(), "hi", &hi)?;
        if lo > hi {
            return Err(param_err(
                self.name(),
                ParamError::Invalid { key: "lo".into(), reason: format!("lo {lo} > hi {hi}") },
            ));
        }
        let span_days = (hi - lo).num_days() as u64 + 1;
        Ok(Box::new(DateGen { lo, span_days }))
    }
}

// --------------------------------------------------------------------- after

/// `max(deps) + delta`, delta uniform in `[min, max]` days (dates) or units
/// (integers). A positive minimum keeps the output strictly greater than
/// every dependency.
struct AfterGen {
    arity: usize,
    output: ValueType,
    delta_min: u64,
    delta_span: u64,
}

impl PropertyGenerator for AfterGen {
    fn dependency_arity(&self) -> usize {
        self.arity
    }

    fn output_type(&self) -> ValueType {
        self.output
    }

    fn run(&self, _id: u64, draw: u64, deps: &[Value]) -> Result<Value, GenError> {
        let delta = (self.delta_min + bounded(draw, self.delta_span)) as i64;
        let base = deps.iter().max().expect("arity checked");
        match base {
            Value::Date(d) => Ok(Value::Date(*d + Duration::days(delta))),
            Value::Int(v) => Ok(Value::Int(v + delta)),
            Value::Str(_) => Err(GenError::DepType {
                generator: "after".into(),
                expected: self.output,
                actual: ValueType::Str,
            }),
        }
    }
}

pub struct AfterFactory;

impl PropertyGeneratorFactory for AfterFactory {
    fn name(&self) -> &'static str {
        "after"
    }

    fn create(&self, ctx: &PropFactoryContext<'_>) -> Result<Box<dyn PropertyGenerator>, GenError> {
        if !matches!(ctx.declared, ValueType::Date | ValueType::Int) {
            return Err(GenError::OutputType { generator: self.name().into(), declared: ctx.declared });
        }
        if ctx.dep_types.is_empty() {
            return Err(GenError::DepArity { generator: self.name().into(), expected: 1, got: 0 });
        }
        for &dep in ctx.dep_types {
            if dep != ctx.declared {
                return Err(GenError::DepType {
                    generator: self.name().into(),
                    expected: ctx.declared,
                    actual: dep,
                });
            }
        }
        let mut r = ParamReader::new(ctx.params);
        let min = r.u64("min").map_err(|e| param_err(self.name(), e))?.unwrap_or(1);
        let max = r.u64("max").map_err(|e| param_err(self.name(), e))?.unwrap_or(min.max(30));
        r.finish().map_err(|e| param_err(self.name(), e))?;
        if min == 0 || min > max {
            return Err(param_err(
                self.name(),
                ParamError::Invalid {
                    key: "min".into(),
                    reason: format!("need 1 <= min <= max, got min={min} max={max}"),
                },
            ));
        }
        Ok(Box::new(AfterGen {
            arity: ctx.dep_types.len(),
            output: ctx.declared,
            delta_min: min,
            delta_span: max - min + 1,
        }))
    }
}

/// All built-in property generator factories.
pub fn register_builtins() -> Vec<Box<dyn PropertyGeneratorFactory>> {
    vec![
        Box::new(DictionaryFactory),
        Box::new(ConditionalFactory),
        Box::new(UniformIntFactory),
        Box::new(UuidFactory),
        Box::new(DateFactory),
        Box::new(AfterFactory),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RandomStream;

    fn ctx<'a>(
        params: &'a [crate::schema::Param],
        declared: ValueType,
        dep_types: &'a [ValueType],
    ) -> PropFactoryContext<'a> {
        PropFactoryContext { params, base_dir: std::path::Path::new("."), declared, dep_types }
    }

    #[test]
    fn uuid_formats_the_id() {
        let gen = UuidFactory.create(&ctx(&[], ValueType::Str, &[])).unwrap();
        assert_eq!(gen.run(712, 0, &[]).unwrap(), Value::Str("712".into()));
    }

    #[test]
    fn uniform_int_stays_in_bounds() {
        let params = crate::schema::parse_schema(
            "node A { x: integer = uniformInt(lo=-3, hi=3) } scale A = 1",
        )
        .unwrap()
        .node_types[0]
            .properties[0]
            .generator
            .parameters
            .clone();
        let gen = UniformIntFactory.create(&ctx(&params, ValueType::Int, &[])).unwrap();
        let stream = RandomStream::derive(1, "u");
        let mut seen_lo = false;
        let mut seen_hi = false;
        for i in 0..10_000 {
            match gen.run(i, stream.value_at(i), &[]).unwrap() {
                Value::Int(v) => {
                    assert!((-3..=3).contains(&v));
                    seen_lo |= v == -3;
                    seen_hi |= v == 3;
                }
                other => panic!("unexpected {other:?}"),
            }
        }
        assert!(seen_lo && seen_hi);
    }

    #[test]
    fn after_is_strictly_greater_than_every_dependency() {
        let gen = AfterFactory
            .create(&ctx(&[], ValueType::Date, &[ValueType::Date, ValueType::Date]))
            .unwrap();
        let stream = RandomStream::derive(2, "after");
        let d1 = NaiveDate::from_ymd_opt(2011, 5, 1).unwrap();
        let d2 = NaiveDate::from_ymd_opt(2010, 8, 20).unwrap();
        for i in 0..5_000 {
            let out = gen
                .run(i, stream.value_at(i), &[Value::Date(d1), Value::Date(d2)])
                .unwrap();
            match out {
                Value::Date(d) => assert!(d > d1 && d > d2),
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    #[test]
    fn date_generator_covers_inclusive_range() {
        let params = crate::schema::parse_schema(
            "node A { x: date = date(lo=\"2020-01-01\", hi=\"2020-01-03\") } scale A = 1",
        )
        .unwrap()
        .node_types[0]
            .properties[0]
            .generator
            .parameters
            .clone();
        let gen = DateFactory.create(&ctx(&params, ValueType::Date, &[])).unwrap();
        let stream = RandomStream::derive(3, "date");
        let mut seen = std::collections::HashSet::new();
        for i in 0..1000 {
            if let Value::Date(d) = gen.run(i, stream.value_at(i), &[]).unwrap() {
                seen.insert(d);
            }
        }
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn output_type_mismatch_is_rejected() {
        let err = UuidFactory.create(&ctx(&[], ValueType::Int, &[])).err().unwrap();
        assert!(matches!(err, GenError::OutputType { .. }), "{err}");
    }
}
