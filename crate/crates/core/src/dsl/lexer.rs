use crate::record::Value;

use super::ast::CompareOp;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Name(String),
    Literal(Value),
    /// Contents of a `"""` block and the line it opened on.
    DocBlock(String),
    Comment(String),
    Newline,
    If,
    Return,
    And,
    Or,
    Not,
    In,
    Op(CompareOp),
    Assign,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name `{n}`"),
            Tok::Literal(v) => format!("literal {v}"),
            Tok::DocBlock(_) => "validation block".into(),
            Tok::Comment(_) => "comment".into(),
            Tok::Newline => "end of line".into(),
            Tok::If => "`if`".into(),
            Tok::Return => "`return`".into(),
            Tok::And => "`and`".into(),
            Tok::Or => "`or`".into(),
            Tok::Not => "`not`".into(),
            Tok::In => "`in`".into(),
            Tok::Op(op) => format!("`{op}`"),
            Tok::Assign => "`=`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
    /// Whether this is the first token on its physical line.
    pub line_start: bool,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
    line: usize,
    col: usize,
    depth: usize,
    line_has_token: bool,
    out: Vec<Token>,
}

/// Splits source text into tokens. Newlines and comments inside brackets
/// are dropped so that predicates may span lines.
pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lx = Lexer {
        chars: src.char_indices().peekable(),
        src,
        line: 1,
        col: 1,
        depth: 0,
        line_has_token: false,
        out: Vec::new(),
    };
    lx.run()?;
    Ok(lx.out)
}

impl<'a> Lexer<'a> {
    fn bump(&mut self) -> Option<char> {
        let (_, c) = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().map(|&(_, c)| c)
    }

    fn rest(&mut self) -> &'a str {
        match self.chars.peek() {
            Some(&(i, _)) => &self.src[i..],
            None => "",
        }
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        let line_start = !self.line_has_token;
        self.line_has_token = true;
        self.out.push(Token { tok, line, col, line_start });
    }

    fn error(
        &self,
        line: usize,
        col: usize,
        expected: &str,
        found: impl Into<String>,
    ) -> ParseError {
        ParseError::Syntax { line, column: col, expected: expected.into(), found: found.into() }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            let (line, col) = (self.line, self.col);
            match c {
                '\n' => {
                    self.bump();
                    if self.depth == 0 {
                        self.out.push(Token { tok: Tok::Newline, line, col, line_start: false });
                    }
                    self.line_has_token = false;
                }
                c if c.is_whitespace() => {
                    self.bump();
                }
                '#' => {
                    let mut text = String::new();
                    self.bump();
                    while let Some(c) = self.peek() {
                        if c == '\n' {
                            break;
                        }
                        text.push(c);
                        self.bump();
                    }
                    if self.depth == 0 {
                        self.push(Tok::Comment(text.trim().to_string()), line, col);
                    }
                }
                '"' if self.rest().starts_with("\"\"\"") => {
                    for _ in 0..3 {
                        self.bump();
                    }
                    let mut body = String::new();
                    loop {
                        if self.rest().starts_with("\"\"\"") {
                            for _ in 0..3 {
                                self.bump();
                            }
                            break;
                        }
                        match self.bump() {
                            Some(c) => body.push(c),
                            None => {
                                return Err(self.error(
                                    line,
                                    col,
                                    "closing `\"\"\"`",
                                    "end of input",
                                ))
                            }
                        }
                    }
                    self.push(Tok::DocBlock(body), line, col);
                }
                '"' | '\'' => {
                    let s = self.string(c)?;
                    self.push(Tok::Literal(Value::Text(s)), line, col);
                }
                c if c.is_ascii_digit() => {
                    let v = self.number()?;
                    self.push(Tok::Literal(v), line, col);
                }
                '-' | '.' => {
                    let ahead: Vec<char> = self.rest().chars().take(3).collect();
                    let numeric = match (c, ahead.get(1), ahead.get(2)) {
                        ('-', Some('.'), Some(d)) => d.is_ascii_digit(),
                        (_, Some(d), _) => d.is_ascii_digit(),
                        _ => false,
                    };
                    if !numeric {
                        return Err(self.error(line, col, "expression", format!("`{c}`")));
                    }
                    let v = self.number()?;
                    self.push(Tok::Literal(v), line, col);
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(c) = self.peek() {
                        if c.is_alphanumeric() || c == '_' {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    let tok = match name.as_str() {
                        "if" => Tok::If,
                        "return" => Tok::Return,
                        "and" => Tok::And,
                        "or" => Tok::Or,
                        "not" => Tok::Not,
                        "in" => Tok::In,
                        "True" => Tok::Literal(Value::Boolean(true)),
                        "False" => Tok::Literal(Value::Boolean(false)),
                        _ => Tok::Name(name),
                    };
                    self.push(tok, line, col);
                }
                '@' => {
                    return Err(self.error(
                        line,
                        col,
                        "statement",
                        "`@` outside a validation block",
                    ))
                }
                _ => {
                    self.bump();
                    let two = |lx: &mut Self, second: char| {
                        if lx.peek() == Some(second) {
                            lx.bump();
                            true
                        } else {
                            false
                        }
                    };
                    let tok = match c {
                        '<' => Tok::Op(if two(self, '=') { CompareOp::Le } else { CompareOp::Lt }),
                        '>' => Tok::Op(if two(self, '=') { CompareOp::Ge } else { CompareOp::Gt }),
                        '=' => {
                            if two(self, '=') {
                                Tok::Op(CompareOp::Eq)
                            } else {
                                Tok::Assign
                            }
                        }
                        '!' if two(self, '=') => Tok::Op(CompareOp::Ne),
                        '(' => {
                            self.depth += 1;
                            Tok::LParen
                        }
                        '{' => {
                            self.depth += 1;
                            Tok::LBrace
                        }
                        ')' | '}' => {
                            self.depth = self.depth.saturating_sub(1);
                            if c == ')' {
                                Tok::RParen
                            } else {
                                Tok::RBrace
                            }
                        }
                        ',' => Tok::Comma,
                        ':' => Tok::Colon,
                        other => return Err(self.error(line, col, "token", format!("`{other}`"))),
                    };
                    self.push(tok, line, col);
                }
            }
        }
        let (line, col) = (self.line, self.col);
        self.out.push(Token { tok: Tok::Newline, line, col, line_start: false });
        self.out.push(Token { tok: Tok::Eof, line, col, line_start: true });
        Ok(())
    }

    fn string(&mut self, quote: char) -> Result<String, ParseError> {
        let (line, col) = (self.line, self.col);
        self.bump();
        let mut s = String::new();
        loop {
            match self.bump() {
                None | Some('\n') => {
                    return Err(self.error(line, col, "closing quote", "end of line"));
                }
                Some(c) if c == quote => return Ok(s),
                Some('\\') => {
                    let esc = self.bump();
                    s.push(match esc {
                        Some('n') => '\n',
                        Some('t') => '\t',
                        Some('r') => '\r',
                        Some('0') => '\0',
                        Some(c @ ('\\' | '"' | '\'')) => c,
                        other => {
                            let found = other.map(|c| format!("`\\{c}`")).unwrap_or_default();
                            return Err(self.error(self.line, self.col, "escape sequence", found));
                        }
                    });
                }
                Some(c) => s.push(c),
            }
        }
    }

    fn number(&mut self) -> Result<Value, ParseError> {
        let (line, col) = (self.line, self.col);
        let mut text = String::new();
        if self.peek() == Some('-') {
            text.push('-');
            self.bump();
        }
        let mut real = false;
        while let Some(c) = self.peek() {
            match c {
                '0'..='9' => {}
                '.' if !real => real = true,
                'e' | 'E' => {
                    real = true;
                    text.push(c);
                    self.bump();
                    if let Some(sign @ ('+' | '-')) = self.peek() {
                        text.push(sign);
                        self.bump();
                    }
                    continue;
                }
                _ => break,
            }
            text.push(c);
            self.bump();
        }
        if let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' || c == '.' {
                return Err(self.error(line, col, "number", format!("`{text}{c}`")));
            }
        }
        if real {
            match text.parse::<f64>() {
                Ok(r) if r.is_finite() => Ok(Value::Real(r)),
                _ => Err(self.error(line, col, "finite number", format!("`{text}`"))),
            }
        } else {
            text.parse::<i64>()
                .map(Value::Integer)
                .map_err(|_| self.error(line, col, "64-bit integer", format!("`{text}`")))
        }
    }
}
