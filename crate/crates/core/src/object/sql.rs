//! A closed SQL subset over the single `objects` table:
//!
//! ```text
//! query       := SELECT select_list FROM objects [WHERE cond] [GROUP BY col]
//!                [ORDER BY col [ASC|DESC]] [LIMIT n] [';']
//! select_list := '*' | item (',' item)*
//! item        := col | COUNT(*) | COUNT(DISTINCT col) | MIN(col) | MAX(col)
//! cond        := cond AND cond | cond OR cond | NOT cond | '(' cond ')'
//!              | col op literal | col IN '(' literal (',' literal)* ')'
//! op          := = | != | < | <= | > | >=
//! ```
//!
//! Keywords and column names are case-insensitive. Literals are integers or
//! single-quoted strings (`''` escapes a quote).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::SqlError;

/// Columns of the `objects` table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Column {
    ObjectId,
    Category,
    SegmentIndex,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::ObjectId, Column::Category, Column::SegmentIndex];

    pub fn name(self) -> &'static str {
        match self {
            Column::ObjectId => "object_id",
            Column::Category => "category",
            Column::SegmentIndex => "segment_index",
        }
    }

    fn is_text(self) -> bool {
        self == Column::Category
    }

    fn lookup(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(name))
    }
}

/// One row of the relational occurrence store.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OccurrenceRow {
    pub object_id: i64,
    pub category: String,
    pub segment_index: i64,
}

impl OccurrenceRow {
    fn get(&self, col: Column) -> Value {
        match col {
            Column::ObjectId => Value::Int(self.object_id),
            Column::Category => Value::Text(self.category.clone()),
            Column::SegmentIndex => Value::Int(self.segment_index),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Null,
    Int(i64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(v) => write!(f, "{v}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl Serialize for Value {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Null => s.serialize_none(),
            Value::Int(v) => s.serialize_i64(*v),
            Value::Text(t) => s.serialize_str(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cond {
    And(Box<Cond>, Box<Cond>),
    Or(Box<Cond>, Box<Cond>),
    Not(Box<Cond>),
    Cmp(Column, CmpOp, Value),
    In(Column, Vec<Value>),
}

impl Cond {
    fn eval(&self, row: &OccurrenceRow) -> bool {
        match self {
            Cond::And(a, b) => a.eval(row) && b.eval(row),
            Cond::Or(a, b) => a.eval(row) || b.eval(row),
            Cond::Not(c) => !c.eval(row),
            Cond::Cmp(col, op, lit) => op.holds(row.get(*col).cmp(lit)),
            Cond::In(col, lits) => {
                let v = row.get(*col);
                lits.iter().any(|l| *l == v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SelectItem {
    Column(Column),
    CountStar,
    CountDistinct(Column),
    Min(Column),
    Max(Column),
}

impl SelectItem {
    fn is_aggregate(self) -> bool {
        !matches!(self, SelectItem::Column(_))
    }

    fn header(self) -> String {
        match self {
            SelectItem::Column(c) => c.name().to_string(),
            SelectItem::CountStar => "COUNT(*)".into(),
            SelectItem::CountDistinct(c) => format!("COUNT(DISTINCT {})", c.name()),
            SelectItem::Min(c) => format!("MIN({})", c.name()),
            SelectItem::Max(c) => format!("MAX({})", c.name()),
        }
    }

    fn aggregate(self, rows: &[&OccurrenceRow]) -> Value {
        match self {
            SelectItem::Column(c) => rows.first().map(|r| r.get(c)).unwrap_or(Value::Null),
            SelectItem::CountStar => Value::Int(rows.len() as i64),
            SelectItem::CountDistinct(c) => {
                let set: BTreeSet<Value> = rows.iter().map(|r| r.get(c)).collect();
                Value::Int(set.len() as i64)
            }
            SelectItem::Min(c) => rows.iter().map(|r| r.get(c)).min().unwrap_or(Value::Null),
            SelectItem::Max(c) => rows.iter().map(|r| r.get(c)).max().unwrap_or(Value::Null),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Projection {
    Star,
    Items(Vec<SelectItem>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Query {
    pub projection: Projection,
    pub filter: Option<Cond>,
    pub group_by: Option<Column>,
    pub order_by: Option<(Column, bool)>,
    pub limit: Option<u64>,
}

/// Tabular query output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl QueryResult {
    /// Header line, then one line per row, cells separated by ` | `.
    pub fn render(&self) -> String {
        let mut out = self.columns.join(" | ");
        if self.rows.is_empty() {
            out.push_str("\n(no rows)");
        }
        for row in &self.rows {
            out.push('\n');
            out.push_str(
                &row.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(" | "),
            );
        }
        out
    }
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Int(i64),
    Str(String),
    Star,
    Comma,
    LParen,
    RParen,
    Semi,
    Op(CmpOp),
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "'{w}'"),
            Tok::Int(i) => write!(f, "{i}"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Star => f.write_str("'*'"),
            Tok::Comma => f.write_str("','"),
            Tok::LParen => f.write_str("'('"),
            Tok::RParen => f.write_str("')'"),
            Tok::Semi => f.write_str("';'"),
            Tok::Op(op) => write!(f, "operator {op:?}"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, SqlError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |pos: usize, message: String| SqlError::Parse { pos, message };
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'*' => {
                out.push((Tok::Star, start));
                i += 1;
            }
            b',' => {
                out.push((Tok::Comma, start));
                i += 1;
            }
            b'(' => {
                out.push((Tok::LParen, start));
                i += 1;
            }
            b')' => {
                out.push((Tok::RParen, start));
                i += 1;
            }
            b';' => {
                out.push((Tok::Semi, start));
                i += 1;
            }
            b'=' => {
                out.push((Tok::Op(CmpOp::Eq), start));
                i += 1;
            }
            b'!' if bytes.get(i + 1) == Some(&b'=') => {
                out.push((Tok::Op(CmpOp::Ne), start));
                i += 2;
            }
            b'<' => match bytes.get(i + 1) {
                Some(b'=') => {
                    out.push((Tok::Op(CmpOp::Le), start));
                    i += 2;
                }
                Some(b'>') => {
                    out.push((Tok::Op(CmpOp::Ne), start));
                    i += 2;
                }
                _ => {
                    out.push((Tok::Op(CmpOp::Lt), start));
                    i += 1;
                }
            },
            b'>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    out.push((Tok::Op(CmpOp::Ge), start));
                    i += 2;
                } else {
                    out.push((Tok::Op(CmpOp::Gt), start));
                    i += 1;
                }
            }
            b'\'' => {
                let mut s = String::new();
                i += 1;
                loop {
                    match src[i..].chars().next() {
                        None => return Err(err(start, "unterminated string literal".into())),
                        Some('\'') if bytes.get(i + 1) == Some(&b'\'') => {
                            s.push('\'');
                            i += 2;
                        }
                        Some('\'') => {
                            i += 1;
                            break;
                        }
                        Some(ch) => {
                            s.push(ch);
                            i += ch.len_utf8();
                        }
                    }
                }
                out.push((Tok::Str(s), start));
            }
            b'-' | b'0'..=b'9' => {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &src[start..i];
                if text == "-" {
                    if bytes.get(i) == Some(&b'-') {
                        return Err(SqlError::Unsupported {
                            pos: start,
                            construct: "comments".into(),
                        });
                    }
                    return Err(err(start, "expected a digit after '-'".into()));
                }
                let v = text
                    .parse::<i64>()
                    .map_err(|_| err(start, format!("integer {text} out of range")))?;
                out.push((Tok::Int(v), start));
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Word(src[start..i].to_string()), start));
            }
            b'"' | b'`' => {
                return Err(SqlError::Unsupported {
                    pos: start,
                    construct: "quoted identifiers (use single quotes for strings)".into(),
                })
            }
            _ => {
                let ch = src[i..].chars().next().unwrap_or('?');
                return Err(err(start, format!("unexpected character {ch:?}")));
            }
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

// ---------------------------------------------------------------- parsing

const UNSUPPORTED_STATEMENTS: &[&str] = &[
    "DROP", "INSERT", "UPDATE", "DELETE", "CREATE", "ALTER", "TRUNCATE", "REPLACE", "WITH",
    "PRAGMA", "ATTACH", "DETACH", "VACUUM", "BEGIN", "COMMIT", "ROLLBACK", "GRANT",
];

const UNSUPPORTED_CLAUSES: &[&str] = &[
    "JOIN", "INNER", "LEFT", "RIGHT", "OUTER", "CROSS", "NATURAL", "HAVING", "UNION",
    "INTERSECT", "EXCEPT", "OFFSET", "AS", "LIKE", "BETWEEN", "IS",
];

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    /// Undoes a `bump` that returned `tok`. Bumping past the end is a no-op.
    fn back(&mut self, tok: &Tok) {
        if *tok != Tok::End {
            self.at -= 1;
        }
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SqlError> {
        Err(SqlError::Parse {
            pos: self.pos(),
            message: message.into(),
        })
    }

    fn unsupported<T>(&self, construct: impl Into<String>) -> Result<T, SqlError> {
        Err(SqlError::Unsupported {
            pos: self.pos(),
            construct: construct.into(),
        })
    }

    fn peek_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_keyword(kw) {
            return Ok(());
        }
        self.check_unsupported_clause()?;
        self.error(format!("expected {kw}, found {}", self.peek()))
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SqlError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn check_unsupported_clause(&self) -> Result<(), SqlError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_CLAUSES.contains(&upper.as_str()) {
                return self.unsupported(upper);
            }
            if upper == "SELECT" {
                return self.unsupported("subqueries");
            }
        }
        Ok(())
    }

    fn column(&mut self) -> Result<Column, SqlError> {
        self.check_unsupported_clause()?;
        match self.peek().clone() {
            Tok::Word(w) => {
                let col = Column::lookup(&w).ok_or(SqlError::UnknownColumn(w))?;
                self.bump();
                if *self.peek() == Tok::LParen {
                    return self.error("unexpected '(' after a column name");
                }
                Ok(col)
            }
            other => self.error(format!("expected a column name, found {other}")),
        }
    }

    fn literal(&mut self) -> Result<Value, SqlError> {
        match self.bump() {
            Tok::Int(v) => Ok(Value::Int(v)),
            Tok::Str(s) => Ok(Value::Text(s)),
            Tok::Word(w) if w.eq_ignore_ascii_case("NULL") => {
                self.at -= 1; // a word is never the end token
                self.unsupported("NULL literals")
            }
            Tok::LParen if self.peek_keyword("SELECT") => self.unsupported("subqueries"),
            other => {
                self.back(&other);
                self.error(format!("expected a literal, found {other}"))
            }
        }
    }

    fn query(&mut self) -> Result<Query, SqlError> {
        if let Tok::Word(w) = self.peek() {
            let upper = w.to_ascii_uppercase();
            if UNSUPPORTED_STATEMENTS.contains(&upper.as_str()) {
                return self.unsupported(format!("{upper} statements (only SELECT is allowed)"));
            }
        }
        self.expect_keyword("SELECT")?;
        if self.peek_keyword("DISTINCT") {
            return self.unsupported("SELECT DISTINCT (use COUNT(DISTINCT col) or GROUP BY)");
        }
        let projection = self.select_list()?;
        self.expect_keyword("FROM")?;
        match self.peek().clone() {
            Tok::Word(w) if w.eq_ignore_ascii_case("objects") => {
                self.bump();
            }
            Tok::LParen => return self.unsupported("subqueries"),
            Tok::Word(w) => return Err(SqlError::UnknownTable(w)),
            other => return self.error(format!("expected a table name, found {other}")),
        }
        if *self.peek() == Tok::Comma {
            return self.unsupported("multi-table FROM");
        }
        let filter = if self.eat_keyword("WHERE") {
            Some(self.or_cond()?)
        } else {
            None
        };
        let group_by = if self.eat_keyword("GROUP") {
            self.expect_keyword("BY")?;
            Some(self.column()?)
        } else {
            None
        };
        let order_by = if self.eat_keyword("ORDER") {
            self.expect_keyword("BY")?;
            let col = self.column()?;
            let desc = if self.eat_keyword("DESC") {
                true
            } else {
                self.eat_keyword("ASC");
                false
            };
            Some((col, desc))
        } else {
            None
        };
        let limit = if self.eat_keyword("LIMIT") {
            match self.bump() {
                Tok::Int(n) if n >= 0 => Some(n as u64),
                other => {
                    self.back(&other);
                    return self.error(format!("expected a non-negative LIMIT, found {other}"));
                }
            }
        } else {
            None
        };
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        if *self.peek() != Tok::End {
            self.check_unsupported_clause()?;
            return self.error(format!("unexpected {} after the query", self.peek()));
        }
        Ok(Query {
            projection,
            filter,
            group_by,
            order_by,
            limit,
        })
    }

    fn select_list(&mut self) -> Result<Projection, SqlError> {
        if *self.peek() == Tok::Star {
            self.bump();
            return Ok(Projection::Star);
        }
        let mut items = vec![self.select_item()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            items.push(self.select_item()?);
        }
        Ok(Projection::Items(items))
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        let Tok::Word(w) = self.peek().clone() else {
            return self.error(format!("expected a select item, found {}", self.peek()));
        };
        let upper = w.to_ascii_uppercase();
        let is_call = matches!(self.toks.get(self.at + 1), Some((Tok::LParen, _)));
        if !is_call {
            let item = SelectItem::Column(self.column()?);
            if self.peek_keyword("AS") {
                return self.unsupported("column aliases (AS)");
            }
            return Ok(item);
        }
        let item = match upper.as_str() {
            "COUNT" => {
                self.bump();
                self.expect(Tok::LParen)?;
                if *self.peek() == Tok::Star {
                    self.bump();
                    SelectItem::CountStar
                } else if self.eat_keyword("DISTINCT") {
                    SelectItem::CountDistinct(self.column()?)
                } else {
                    return self
                        .unsupported("COUNT(column); use COUNT(*) or COUNT(DISTINCT column)");
                }
            }
            "MIN" | "MAX" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let col = self.column()?;
                if upper == "MIN" {
                    SelectItem::Min(col)
                } else {
                    SelectItem::Max(col)
                }
            }
            _ => return self.unsupported(format!("function {upper}")),
        };
        self.expect(Tok::RParen)?;
        if self.peek_keyword("AS") {
            return self.unsupported("column aliases (AS)");
        }
        Ok(item)
    }

    fn or_cond(&mut self) -> Result<Cond, SqlError> {
        let mut left = self.and_cond()?;
        while self.eat_keyword("OR") {
            let right = self.and_cond()?;
            left = Cond::Or(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn and_cond(&mut self) -> Result<Cond, SqlError> {
        let mut left = self.not_cond()?;
        while self.eat_keyword("AND") {
            let right = self.not_cond()?;
            left = Cond::And(Box::new(left), Box::new(right));
        }
        Ok(left)
    }

    fn not_cond(&mut self) -> Result<Cond, SqlError> {
        if self.eat_keyword("NOT") {
            return Ok(Cond::Not(Box::new(self.not_cond()?)));
        }
        self.primary_cond()
    }

    fn primary_cond(&mut self) -> Result<Cond, SqlError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            if self.peek_keyword("SELECT") {
                return self.unsupported("subqueries");
            }
            let c = self.or_cond()?;
            self.expect(Tok::RParen)?;
            return Ok(c);
        }
        let col = self.column()?;
        if self.eat_keyword("IN") {
            self.expect(Tok::LParen)?;
            if self.peek_keyword("SELECT") {
                return self.unsupported("subqueries");
            }
            let mut lits = vec![self.literal()?];
            while *self.peek() == Tok::Comma {
                self.bump();
                lits.push(self.literal()?);
            }
            self.expect(Tok::RParen)?;
            for l in &lits {
                type_check(col, l)?;
            }
            return Ok(Cond::In(col, lits));
        }
        if self.peek_keyword("NOT") {
            return self.unsupported("'col NOT IN'; write NOT col IN (...)");
        }
        self.check_unsupported_clause()?;
        let op = match self.bump() {
            Tok::Op(op) => op,
            other => {
                self.back(&other);
                return self.error(format!("expected a comparison operator, found {other}"));
            }
        };
        let lit = self.literal()?;
        type_check(col, &lit)?;
        Ok(Cond::Cmp(col, op, lit))
    }
}

fn type_check(col: Column, lit: &Value) -> Result<(), SqlError> {
    let ok = match lit {
        Value::Int(_) => !col.is_text(),
        Value::Text(_) => col.is_text(),
        Value::Null => false,
    };
    if ok {
        Ok(())
    } else {
        Err(SqlError::TypeMismatch(format!(
            "column {} is {} but the literal is {}",
            col.name(),
            if col.is_text() { "TEXT" } else { "INT" },
            match lit {
                Value::Int(_) => "an integer",
                Value::Text(_) => "a string",
                Value::Null => "NULL",
            }
        )))
    }
}

/// Parses and validates a query without running it.
pub fn parse(sql: &str) -> Result<Query, SqlError> {
    let mut p = Parser {
        toks: lex(sql)?,
        at: 0,
    };
    let q = p.query()?;
    validate(&q)?;
    Ok(q)
}

fn validate(q: &Query) -> Result<(), SqlError> {
    let items = match &q.projection {
        Projection::Star => {
            if q.group_by.is_some() {
                return Err(SqlError::Aggregation("SELECT * cannot be grouped".into()));
            }
            return Ok(());
        }
        Projection::Items(items) => items,
    };
    let any_agg = items.iter().any(|i| i.is_aggregate());
    match q.group_by {
        Some(g) => {
            for item in items {
                if let SelectItem::Column(c) = item {
                    if *c != g {
                        return Err(SqlError::Aggregation(format!(
                            "column {} must appear in GROUP BY or inside an aggregate",
                            c.name()
                        )));
                    }
                }
            }
            if let Some((c, _)) = q.order_by {
                if c != g {
                    return Err(SqlError::Aggregation(format!(
                        "a grouped query can only be ordered by its group column {}",
                        g.name()
                    )));
                }
            }
        }
        None if any_agg => {
            if let Some(SelectItem::Column(c)) = items.iter().find(|i| !i.is_aggregate()) {
                return Err(SqlError::Aggregation(format!(
                    "column {} mixed with aggregates needs GROUP BY",
                    c.name()
                )));
            }
        }
        None => {}
    }
    Ok(())
}

/// Runs a parsed query. `rows` must already be in (object_id, segment_index) order.
pub fn evaluate(q: &Query, rows: &[OccurrenceRow]) -> QueryResult {
    let mut matched: Vec<&OccurrenceRow> = rows
        .iter()
        .filter(|r| q.filter.as_ref().map_or(true, |c| c.eval(r)))
        .collect();

    let (columns, mut out_rows): (Vec<String>, Vec<Vec<Value>>) = match &q.projection {
        Projection::Star => {
            sort_rows(&mut matched, q.order_by);
            (
                Column::ALL.iter().map(|c| c.name().to_string()).collect(),
                matched
                    .iter()
                    .map(|r| Column::ALL.iter().map(|c| r.get(*c)).collect())
                    .collect(),
            )
        }
        Projection::Items(items) => {
            let headers = items.iter().map(|i| i.header()).collect();
            if let Some(g) = q.group_by {
                let mut keys: Vec<Value> = matched.iter().map(|r| r.get(g)).collect();
                keys.sort();
                keys.dedup();
                if let Some((_, true)) = q.order_by {
                    keys.reverse();
                }
                let rows = keys
                    .into_iter()
                    .map(|k| {
                        let members: Vec<&OccurrenceRow> =
                            matched.iter().copied().filter(|r| r.get(g) == k).collect();
                        items.iter().map(|i| i.aggregate(&members)).collect()
                    })
                    .collect();
                (headers, rows)
            } else if items.iter().any(|i| i.is_aggregate()) {
                (headers, vec![items.iter().map(|i| i.aggregate(&matched)).collect()])
            } else {
                sort_rows(&mut matched, q.order_by);
                let rows = matched
                    .iter()
                    .map(|r| {
                        items
                            .iter()
                            .map(|i| match i {
                                SelectItem::Column(c) => r.get(*c),
                                _ => unreachable!("validated as non-aggregate"),
                            })
                            .collect()
                    })
                    .collect();
                (headers, rows)
            }
        }
    };
    if let Some(n) = q.limit {
        out_rows.truncate(usize::try_from(n).unwrap_or(usize::MAX));
    }
    QueryResult {
        columns,
        rows: out_rows,
    }
}

/// Stable sort, so ties keep the default (object_id, segment_index) order.
fn sort_rows(rows: &mut [&OccurrenceRow], order_by: Option<(Column, bool)>) {
    if let Some((col, desc)) = order_by {
        rows.sort_by(|a, b| {
            let ord = a.get(col).cmp(&b.get(col));
            if desc {
                ord.reverse()
            } else {
                ord
            }
        });
    }
}

/// Parse and run in one step.
pub fn execute(sql: &str, rows: &[OccurrenceRow]) -> Result<QueryResult, SqlError> {
    Ok(evaluate(&parse(sql)?, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<OccurrenceRow> {
        let mut out = Vec::new();
        for (id, cat, segs) in [
            (0, "elephant", vec![0, 1, 2, 3]),
            (1, "elephant", vec![2, 3, 4, 5]),
            (2, "cup", vec![1, 7]),
        ] {
            for s in segs {
                out.push(OccurrenceRow {
                    object_id: id,
                    category: cat.to_string(),
                    segment_index: s,
                });
            }
        }
        out
    }

    fn run(sql: &str) -> QueryResult {
        execute(sql, &rows()).unwrap()
    }

    fn ints(r: &QueryResult) -> Vec<i64> {
        r.rows
            .iter()
            .map(|row| match row[0] {
                Value::Int(v) => v,
                _ => panic!("not an int"),
            })
            .collect()
    }

    #[test]
    fn elephant_count() {
        let r = run("SELECT COUNT(DISTINCT object_id) FROM objects WHERE category = 'elephant'");
        assert_eq!(r.columns, vec!["COUNT(DISTINCT object_id)"]);
        assert_eq!(r.rows, vec![vec![Value::Int(2)]]);
        assert_eq!(r.render(), "COUNT(DISTINCT object_id)\n2");
    }

    #[test]
    fn projection_of_one_object() {
        let r = run("select segment_index from OBJECTS where object_id = 1;");
        assert_eq!(ints(&r), vec![2, 3, 4, 5]);
    }

    #[test]
    fn ordering_limit_and_in() {
        let r = run("SELECT object_id FROM objects WHERE segment_index IN (2, 7) ORDER BY object_id DESC LIMIT 2");
        assert_eq!(ints(&r), vec![2, 1]);
        let r = run("SELECT segment_index FROM objects WHERE NOT (category = 'cup' OR segment_index < 3)");
        assert_eq!(ints(&r), vec![3, 3, 4, 5]);
    }

    #[test]
    fn grouping() {
        let r = run("SELECT category, COUNT(*), MIN(segment_index), MAX(segment_index) FROM objects GROUP BY category");
        assert_eq!(
            r.rows,
            vec![
                vec![Value::Text("cup".into()), Value::Int(2), Value::Int(1), Value::Int(7)],
                vec![Value::Text("elephant".into()), Value::Int(8), Value::Int(0), Value::Int(5)],
            ]
        );
        let r = run("SELECT MIN(segment_index) FROM objects WHERE object_id = 99");
        assert_eq!(r.rows, vec![vec![Value::Null]]);
    }

    #[test]
    fn rejects_outside_grammar() {
        let unsupported = |sql: &str| matches!(parse(sql), Err(SqlError::Unsupported { .. }));
        assert!(unsupported("DROP TABLE objects"));
        assert!(unsupported("DELETE FROM objects"));
        assert!(unsupported("SELECT * FROM objects JOIN other"));
        assert!(unsupported("SELECT COUNT(object_id) FROM objects"));
        assert!(unsupported("SELECT object_id AS o FROM objects"));
        assert!(unsupported("SELECT * FROM objects WHERE object_id IN (SELECT 1)"));
        assert!(unsupported("SELECT DISTINCT category FROM objects"));
        assert!(unsupported("SELECT SUM(object_id) FROM objects"));
        assert!(unsupported("SELECT * FROM objects WHERE category LIKE 'c%'"));
        assert!(matches!(
            parse("SELECT colour FROM objects"),
            Err(SqlError::UnknownColumn(c)) if c == "colour"
        ));
        assert!(matches!(parse("SELECT * FROM people"), Err(SqlError::UnknownTable(_))));
        assert!(matches!(
            parse("SELECT * FROM objects WHERE category = 3"),
            Err(SqlError::TypeMismatch(_))
        ));
        assert!(matches!(
            parse("SELECT object_id, COUNT(*) FROM objects"),
            Err(SqlError::Aggregation(_))
        ));
        assert!(matches!(
            parse("SELECT object_id FROM objects GROUP BY category"),
            Err(SqlError::Aggregation(_))
        ));
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse("SELECT * FROM objects WHERE object_id = ") {
            Err(SqlError::Parse { pos, .. }) => assert_eq!(pos, 40),
            other => panic!("unexpected {other:?}"),
        }
        match parse("SELECT * FROM objects WHERE category = 'x") {
            Err(SqlError::Parse { pos, message }) => {
                assert_eq!(pos, 39);
                assert!(message.contains("unterminated"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("SELECT * FROM objects extra"), Err(SqlError::Parse { .. })));
        assert!(matches!(parse(""), Err(SqlError::Parse { pos: 0, .. })));
    }

    #[test]
    fn escaped_quotes_and_negatives() {
        let q = parse("SELECT * FROM objects WHERE category = 'it''s' OR segment_index > -1").unwrap();
        match q.filter.unwrap() {
            Cond::Or(a, b) => {
                assert_eq!(*a, Cond::Cmp(Column::Category, CmpOp::Eq, Value::Text("it's".into())));
                assert_eq!(*b, Cond::Cmp(Column::SegmentIndex, CmpOp::Gt, Value::Int(-1)));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn precedence_and_binds_tighter() {
        // a OR b AND c  ==  a OR (b AND c)
        let r = run("SELECT segment_index FROM objects WHERE object_id = 2 OR object_id = 0 AND segment_index = 3");
        assert_eq!(ints(&r), vec![3, 1, 7]);
    }
}
