//! Hand-written lexer producing spanned tokens.

use super::Span;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Integer or decimal literal, possibly negative. Raw text kept so the
    /// parser can distinguish integers from floats.
    Number(String),
    /// Quoted string, unescaped.
    Str(String),
    /// Bare word containing `.`, `/` or `-`; used for unquoted file paths.
    Path(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Comma,
    Equals,
    Tilde,
    Arrow,
    DashDash,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string literal".into(),
            Tok::Path(s) => format!("`{s}`"),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::DashDash => "`--`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

#[derive(Debug)]
pub struct LexError {
    pub message: String,
    pub span: Span,
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    line: u32,
    col: u32,
}

fn is_word_byte(b: u8) -> bool {
    b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'/' | b'-')
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Self {
        Self { src: src.as_bytes(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn peek2(&self) -> Option<u8> {
        self.src.get(self.pos + 1).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        if b == b'\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(b)
    }

    fn here(&self) -> (usize, u32, u32) {
        (self.pos, self.line, self.col)
    }

    fn span_from(&self, start: (usize, u32, u32)) -> Span {
        Span { start: start.0, end: self.pos, line: start.1, col: start.2 }
    }

    fn skip_trivia(&mut self) {
        loop {
            match self.peek() {
                Some(b) if b.is_ascii_whitespace() => {
                    self.bump();
                }
                Some(b'#') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                _ => break,
            }
        }
    }

    /// A maximal run of word bytes; classified as Ident, Number or Path.
    fn word(&mut self, start: (usize, u32, u32)) -> Result<Token, LexError> {
        while let Some(b) = self.peek() {
            if is_word_byte(b) {
                self.bump();
            } else {
                break;
            }
        }
        let span = self.span_from(start);
        let text = std::str::from_utf8(&self.src[span.start..span.end]).unwrap().to_string();
        let first = text.as_bytes()[0];
        let tok = if first.is_ascii_digit() || first == b'-' {
            if text[1..].bytes().all(|b| b.is_ascii_digit() || b == b'.')
                && text.bytes().filter(|&b| b == b'.').count() <= 1
            {
                Tok::Number(text)
            } else {
                return Err(LexError { message: format!("malformed number `{text}`"), span });
            }
        } else if text.bytes().any(|b| matches!(b, b'.' | b'/' | b'-')) {
            Tok::Path(text)
        } else {
            Tok::Ident(text)
        };
        Ok(Token { tok, span })
    }

    fn string(&mut self, start: (usize, u32, u32)) -> Result<Token, LexError> {
        let mut out = String::new();
        loop {
            match self.bump() {
                None => {
                    return Err(LexError {
                        message: "unterminated string literal".into(),
                        span: self.span_from(start),
                    })
                }
                Some(b'"') => break,
                Some(b'\\') => match self.bump() {
                    Some(b'"') => out.push('"'),
                    Some(b'\\') => out.push('\\'),
                    other => {
                        return Err(LexError {
                            message: format!(
                                "unsupported escape `\\{}`",
                                other.map(|b| b as char).unwrap_or(' ')
                            ),
                            span: self.span_from(start),
                        })
                    }
                },
                Some(b) => out.push(b as char),
            }
        }
        Ok(Token { tok: Tok::Str(out), span: self.span_from(start) })
    }

    fn next_token(&mut self) -> Result<Token, LexError> {
        self.skip_trivia();
        let start = self.here();
        let Some(b) = self.peek() else {
            return Ok(Token { tok: Tok::Eof, span: self.span_from(start) });
        };
        let simple = |lexer: &mut Self, tok: Tok| {
            lexer.bump();
            Ok(Token { tok, span: lexer.span_from(start) })
        };
        match b {
            b'{' => simple(self, Tok::LBrace),
            b'}' => simple(self, Tok::RBrace),
            b'(' => simple(self, Tok::LParen),
            b')' => simple(self, Tok::RParen),
            b':' => simple(self, Tok::Colon),
            b',' => simple(self, Tok::Comma),
            b'=' => simple(self, Tok::Equals),
            b'~' => simple(self, Tok::Tilde),
            b'-' => match self.peek2() {
                Some(b'>') => {
                    self.bump();
                    self.bump();
                    Ok(Token { tok: Tok::Arrow, span: self.span_from(start) })
                }
                Some(b'-') => {
                    self.bump();
                    self.bump();
                    Ok(Token { tok: Tok::DashDash, span: self.span_from(start) })
                }
                Some(d) if d.is_ascii_digit() => {
                    self.bump();
                    self.word(start)
                }
                _ => {
                    self.bump();
                    Err(LexError {
                        message: "stray `-`".into(),
                        span: self.span_from(start),
                    })
                }
            },
            b'"' => {
                self.bump();
                self.string(start)
            }
            b if b.is_ascii_alphanumeric() || b == b'_' => self.word(start),
            b => {
                self.bump();
                Err(LexError {
                    message: format!("unexpected character `{}`", b as char),
                    span: self.span_from(start),
                })
            }
        }
    }
}

pub fn lex(src: &str) -> Result<Vec<Token>, LexError> {
    let mut lexer = Lexer::new(src);
    let mut tokens = Vec::new();
    loop {
        let token = lexer.next_token()?;
        let done = token.tok == Tok::Eof;
        tokens.push(token);
        if done {
            return Ok(tokens);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        lex(src).map_err(|e| e.message).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn words_split_into_ident_number_path() {
        assert_eq!(
            kinds("Person 0.57 names.csv data/n-x.csv -5"),
            vec![
                Tok::Ident("Person".into()),
                Tok::Number("0.57".into()),
                Tok::Path("names.csv".into()),
                Tok::Path("data/n-x.csv".into()),
                Tok::Number("-5".into()),
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn arrows_and_punctuation() {
        assert_eq!(
            kinds("Person -- Person -> { } ( ) : , = ~"),
            vec![
                Tok::Ident("Person".into()),
                Tok::DashDash,
                Tok::Ident("Person".into()),
                Tok::Arrow,
                Tok::LBrace,
                Tok::RBrace,
                Tok::LParen,
                Tok::RParen,
                Tok::Colon,
                Tok::Comma,
                Tok::Equals,
                Tok::Tilde,
                Tok::Eof,
            ]
        );
    }

    #[test]
    fn comments_and_strings() {
        assert_eq!(
            kinds("# a comment\n\"he said \\\"hi\\\"\" x"),
            vec![Tok::Str("he said \"hi\"".into()), Tok::Ident("x".into()), Tok::Eof]
        );
    }

    #[test]
    fn spans_track_lines_and_columns() {
        let tokens = lex("node A {\n  b: string = g()\n}").unwrap();
        let b = tokens.iter().find(|t| t.tok == Tok::Ident("b".into())).unwrap();
        assert_eq!((b.span.line, b.span.col), (2, 3));
    }

    #[test]
    fn unterminated_string_errors() {
        assert!(lex("\"oops").is_err());
    }
}
