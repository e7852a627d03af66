use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Int,
    Float,
    Str,
    // Keywords. Aggregator names are not keywords.
    KwInput,
    KwOutput,
    KwWeight,
    KwOf,
    KwVisit,
    KwVisitor,
    KwBefore,
    KwForeach,
    KwDef,
    KwTrue,
    KwFalse,
    // Punctuation and operators.
    Colon,     // :
    Declare,   // :=
    Semi,      // ;
    Comma,     // ,
    Dot,       // .
    Assign,    // =
    EmitOp,    // <<
    Arrow,     // ->
    PlusPlus,  // ++
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
}

impl TokenKind {
    pub fn keyword(ident: &str) -> Option<TokenKind> {
        Some(match ident {
            "input" => TokenKind::KwInput,
            "output" => TokenKind::KwOutput,
            "weight" => TokenKind::KwWeight,
            "of" => TokenKind::KwOf,
            "visit" => TokenKind::KwVisit,
            "visitor" => TokenKind::KwVisitor,
            "before" => TokenKind::KwBefore,
            "foreach" => TokenKind::KwForeach,
            "def" => TokenKind::KwDef,
            "true" => TokenKind::KwTrue,
            "false" => TokenKind::KwFalse,
            _ => return None,
        })
    }

    pub fn describe(self) -> &'static str {
        match self {
            TokenKind::Ident => "identifier",
            TokenKind::Int => "integer literal",
            TokenKind::Float => "float literal",
            TokenKind::Str => "string literal",
            TokenKind::KwInput => "'input'",
            TokenKind::KwOutput => "'output'",
            TokenKind::KwWeight => "'weight'",
            TokenKind::KwOf => "'of'",
            TokenKind::KwVisit => "'visit'",
            TokenKind::KwVisitor => "'visitor'",
            TokenKind::KwBefore => "'before'",
            TokenKind::KwForeach => "'foreach'",
            TokenKind::KwDef => "'def'",
            TokenKind::KwTrue => "'true'",
            TokenKind::KwFalse => "'false'",
            TokenKind::Colon => "':'",
            TokenKind::Declare => "':='",
            TokenKind::Semi => "';'",
            TokenKind::Comma => "','",
            TokenKind::Dot => "'.'",
            TokenKind::Assign => "'='",
            TokenKind::EmitOp => "'<<'",
            TokenKind::Arrow => "'->'",
            TokenKind::PlusPlus => "'++'",
            TokenKind::LParen => "'('",
            TokenKind::RParen => "')'",
            TokenKind::LBrace => "'{'",
            TokenKind::RBrace => "'}'",
            TokenKind::LBracket => "'['",
            TokenKind::RBracket => "']'",
            TokenKind::Plus => "'+'",
            TokenKind::Minus => "'-'",
            TokenKind::Star => "'*'",
            TokenKind::Slash => "'/'",
            TokenKind::Lt => "'<'",
            TokenKind::Le => "'<='",
            TokenKind::Gt => "'>'",
            TokenKind::Ge => "'>='",
            TokenKind::EqEq => "'=='",
            TokenKind::Ne => "'!='",
        }
    }
}

impl fmt::Display for TokenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.describe())
    }
}

/// One lexical token. For string literals `lexeme` holds the decoded
/// contents, without quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub line: u32,
    pub col: u32,
}
