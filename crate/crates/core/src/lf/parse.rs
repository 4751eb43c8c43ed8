use std::collections::BTreeSet;

use super::{Formalism, LfError, LfTree, Node, NodeKind};

/// Operators that bind a variable when their first argument is a variable.
pub const DEFAULT_BINDERS: &[&str] = &[
    "_lambda", "lambda", "_exists", "exists", "_argmax", "_argmin", "argmax", "argmin", "_count", "count", "_sum",
    "sum", "_the", "the", "_max", "_min", "_forall", "forall",
];

const COMPARATORS: &[&str] = &["!=", "=", "<", ">", "<=", ">="];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseConfig {
    pub binders: BTreeSet<String>,
}

impl Default for ParseConfig {
    fn default() -> Self {
        ParseConfig { binders: DEFAULT_BINDERS.iter().map(|s| s.to_string()).collect() }
    }
}

pub fn parse(text: &str, formalism: Formalism) -> Result<LfTree, LfError> {
    parse_with(text, formalism, &ParseConfig::default())
}

pub fn parse_with(text: &str, formalism: Formalism, config: &ParseConfig) -> Result<LfTree, LfError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, end: text.len(), formalism, config };
    let root = match formalism {
        Formalism::Funql => p.funql_expr()?,
        Formalism::Lambda => p.lambda_expr()?,
        Formalism::Overnight => p.overnight_or()?,
    };
    if let Some(t) = p.peek() {
        return Err(syntax(t.offset, format!("unexpected trailing {:?}", t.text)));
    }
    Ok(LfTree::new(formalism, root))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TokKind {
    Open,
    Close,
    Comma,
    Meet,
    Union,
    Word,
    Quoted,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokKind,
    text: String,
    offset: usize,
}

fn syntax(offset: usize, message: impl Into<String>) -> LfError {
    LfError::Syntax { offset, message: message.into() }
}

fn is_delim(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | ',' | '⊓' | '⊔')
}

fn lex(text: &str) -> Result<Vec<Token>, LfError> {
    let mut tokens = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(i, c)) = chars.peek() {
        let single = match c {
            '(' => Some(TokKind::Open),
            ')' => Some(TokKind::Close),
            ',' => Some(TokKind::Comma),
            '⊓' => Some(TokKind::Meet),
            '⊔' => Some(TokKind::Union),
            _ => None,
        };
        if c.is_whitespace() {
            chars.next();
        } else if let Some(kind) = single {
            chars.next();
            tokens.push(Token { kind, text: c.to_string(), offset: i });
        } else if c == '\'' || c == '"' {
            chars.next();
            let mut end = None;
            for (j, d) in chars.by_ref() {
                if d == c {
                    end = Some(j);
                    break;
                }
            }
            let end = end.ok_or_else(|| syntax(i, "unterminated quoted literal"))?;
            tokens.push(Token { kind: TokKind::Quoted, text: text[i..=end].to_string(), offset: i });
        } else if c.is_control() {
            return Err(syntax(i, format!("unexpected character {c:?}")));
        } else {
            let mut end = text.len();
            while let Some(&(j, d)) = chars.peek() {
                if is_delim(d) {
                    end = j;
                    break;
                }
                if d.is_control() {
                    return Err(syntax(j, format!("unexpected character {d:?}")));
                }
                chars.next();
            }
            tokens.push(Token { kind: TokKind::Word, text: text[i..end].to_string(), offset: i });
        }
    }
    Ok(tokens)
}

pub(crate) fn is_numeric(word: &str) -> bool {
    let mut cs = word.chars();
    let first = match cs.next() {
        Some(c) => c,
        None => return false,
    };
    let leads =
        first.is_ascii_digit() || (matches!(first, '-' | '+' | '.') && cs.next().is_some_and(|c| c.is_ascii_digit()));
    leads && word.parse::<f64>().is_ok()
}

fn is_comparator(word: &str) -> bool {
    COMPARATORS.contains(&word)
}

fn is_join(word: &str) -> bool {
    word.len() > 1 && word.ends_with('.') && !is_numeric(word)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    end: usize,
    formalism: Formalism,
    config: &'a ParseConfig,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self, ahead: usize) -> Option<TokKind> {
        self.tokens.get(self.pos + ahead).map(|t| t.kind)
    }

    fn next(&mut self) -> Result<Token, LfError> {
        let t = self.tokens.get(self.pos).cloned().ok_or_else(|| syntax(self.end, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kind: TokKind, what: &str) -> Result<Token, LfError> {
        let t = self.next()?;
        if t.kind != kind {
            return Err(syntax(t.offset, format!("expected {what}, found {:?}", t.text)));
        }
        Ok(t)
    }

    fn atom(&self, tok: &Token) -> Node {
        let kind = if tok.kind == TokKind::Quoted || is_numeric(&tok.text) {
            NodeKind::Literal
        } else if self.formalism == Formalism::Lambda && tok.text.starts_with('$') {
            NodeKind::Variable
        } else {
            NodeKind::Entity
        };
        Node::leaf(kind, tok.text.clone())
    }

    // name [ '(' [expr {',' expr}] ')' ]
    fn funql_expr(&mut self) -> Result<Node, LfError> {
        let tok = self.next()?;
        match tok.kind {
            TokKind::Quoted => Ok(self.atom(&tok)),
            TokKind::Word => {
                if self.peek_kind(0) != Some(TokKind::Open) {
                    return Ok(self.atom(&tok));
                }
                self.pos += 1;
                let args = self.call_args(Self::funql_expr)?;
                if args.is_empty() {
                    return Ok(self.atom(&tok));
                }
                Ok(Node::apply(tok.text, args))
            }
            _ => Err(syntax(tok.offset, format!("expected a name, found {:?}", tok.text))),
        }
    }

    /// Arguments after an opening parenthesis, through the closing one.
    fn call_args(&mut self, item: fn(&mut Self) -> Result<Node, LfError>) -> Result<Vec<Node>, LfError> {
        let mut args = Vec::new();
        if self.peek_kind(0) == Some(TokKind::Close) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(item(self)?);
            let t = self.next()?;
            match t.kind {
                TokKind::Comma => continue,
                TokKind::Close => return Ok(args),
                _ => return Err(syntax(t.offset, format!("expected ',' or ')', found {:?}", t.text))),
            }
        }
    }

    // atom | '(' head expr* ')'
    fn lambda_expr(&mut self) -> Result<Node, LfError> {
        let tok = self.next()?;
        match tok.kind {
            TokKind::Word | TokKind::Quoted => Ok(self.atom(&tok)),
            TokKind::Open => {
                let head = self.expect(TokKind::Word, "an operator after '('")?;
                let mut children = Vec::new();
                loop {
                    match self.peek_kind(0) {
                        Some(TokKind::Close) => {
                            self.pos += 1;
                            break;
                        }
                        Some(_) => children.push(self.lambda_expr()?),
                        None => return Err(syntax(self.end, "unexpected end of input")),
                    }
                }
                let binds = self.config.binders.contains(&head.text)
                    && children.first().is_some_and(|c| c.kind == NodeKind::Variable);
                let kind = if binds { NodeKind::Binder } else { NodeKind::Apply };
                Ok(Node { kind, name: head.text, children })
            }
            _ => Err(syntax(tok.offset, format!("unexpected {:?}", tok.text))),
        }
    }

    fn overnight_or(&mut self) -> Result<Node, LfError> {
        self.overnight_infix(TokKind::Union, "or", Self::overnight_and)
    }

    fn overnight_and(&mut self) -> Result<Node, LfError> {
        self.overnight_infix(TokKind::Meet, "and", Self::overnight_unary)
    }

    fn overnight_infix(
        &mut self,
        op: TokKind,
        name: &str,
        operand: fn(&mut Self) -> Result<Node, LfError>,
    ) -> Result<Node, LfError> {
        let mut items = vec![operand(self)?];
        while self.peek_kind(0) == Some(op) {
            self.pos += 1;
            items.push(operand(self)?);
        }
        if items.len() == 1 {
            Ok(items.pop().unwrap())
        } else {
            Ok(Node::apply(name, items))
        }
    }

    // Prefix comparators (`!= 10`) and joins (`EndTime. x`) bind tighter
    // than the infix set operators.
    fn overnight_unary(&mut self) -> Result<Node, LfError> {
        if let Some(t) = self.peek() {
            let prefix = t.kind == TokKind::Word
                && (is_comparator(&t.text) || is_join(&t.text))
                && self.peek_kind(1) != Some(TokKind::Open);
            if prefix {
                let op = self.next()?;
                let operand = self.overnight_unary()?;
                return Ok(Node::apply(op.text, vec![operand]));
            }
        }
        self.overnight_primary()
    }

    fn overnight_primary(&mut self) -> Result<Node, LfError> {
        let tok = self.next()?;
        match tok.kind {
            TokKind::Quoted => Ok(self.atom(&tok)),
            TokKind::Open => {
                let inner = self.overnight_or()?;
                self.expect(TokKind::Close, "')'")?;
                Ok(inner)
            }
            TokKind::Word if is_comparator(&tok.text) || is_join(&tok.text) => {
                // Only reachable when followed by '('.
                self.pos += 1;
                let args = self.call_args(Self::overnight_or)?;
                if args.is_empty() {
                    return Err(syntax(tok.offset, "operator call without arguments"));
                }
                Ok(Node::apply(tok.text, args))
            }
            TokKind::Word => {
                let mut words = vec![tok.clone()];
                while let Some(t) = self.peek() {
                    if t.kind == TokKind::Word && !is_comparator(&t.text) && !is_join(&t.text) {
                        words.push(self.next()?);
                    } else {
                        break;
                    }
                }
                if self.peek_kind(0) == Some(TokKind::Open) {
                    let open = self.next()?;
                    let args = self.call_args(Self::overnight_or)?;
                    if args.is_empty() {
                        if words.len() > 1 {
                            return Err(syntax(open.offset, "multi-word functor without arguments"));
                        }
                        return Ok(self.atom(&tok));
                    }
                    let name = words.iter().map(|w| w.text.as_str()).collect::<Vec<_>>().join(" ");
                    Ok(Node::apply(name, args))
                } else if words.len() == 1 {
                    Ok(self.atom(&tok))
                } else {
                    Err(syntax(words[1].offset, format!("unexpected {:?}", words[1].text)))
                }
            }
            _ => Err(syntax(tok.offset, format!("unexpected {:?}", tok.text))),
        }
    }
}
