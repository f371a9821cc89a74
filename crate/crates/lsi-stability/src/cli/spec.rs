//! Field-specification grammar.
//!
//! A spec is `family(key=value, ...)`: every value is a number in decimal or
//! scientific notation and whitespace is insignificant anywhere between
//! tokens. The families and their parameters:
//!
//! | family    | parameters            | field                                        |
//! |-----------|-----------------------|----------------------------------------------|
//! | `gauss`   | `a`                   | Gaussian trial `u_a = (2a+1)^{n/4} e^{-a pi |x|^2}` |
//! | `tilt`    | `c`, `a`              | extremal `c e^{a x_1}`                       |
//! | `hermite` | `k`, `eps`            | perturbation `(1 + eps h_k)/sqrt(1+eps^2)`, one-dimensional |
//! | `mix`     | `eps`, `b`            | gamma-density `(1-eps) + eps e^{b x - b^2/2}`, one-dimensional |
//! | `shifted` | `base`, `x0`, `a`, `s`| `s u_base(x - x0 e_1) e^{a x_1}` with `u_base` the Gaussian trial of parameter `base` |
//!
//! Every family additionally accepts an optional `dim` key (a positive
//! integer, default 1) choosing the ambient dimension, so a spec string is
//! self-contained and the printed form reparses to an equal spec. Scalar
//! shift and tilt parameters act along the first coordinate axis.
//!
//! Parse errors report the 1-based byte offset at which the problem was
//! detected; end of input counts as one past the last byte.

use crate::error::{Error, Result};
use crate::fields::{self, ScalarField};
use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt;

/// The field families the grammar knows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Gauss,
    Tilt,
    Hermite,
    Mix,
    Shifted,
}

impl Family {
    /// Grammar name of the family.
    pub fn name(self) -> &'static str {
        match self {
            Family::Gauss => "gauss",
            Family::Tilt => "tilt",
            Family::Hermite => "hermite",
            Family::Mix => "mix",
            Family::Shifted => "shifted",
        }
    }

    /// Required parameter keys, in canonical print order.
    pub fn keys(self) -> &'static [&'static str] {
        match self {
            Family::Gauss => &["a"],
            Family::Tilt => &["c", "a"],
            Family::Hermite => &["k", "eps"],
            Family::Mix => &["eps", "b"],
            Family::Shifted => &["base", "x0", "a", "s"],
        }
    }

    fn from_name(s: &str) -> Option<Family> {
        match s {
            "gauss" => Some(Family::Gauss),
            "tilt" => Some(Family::Tilt),
            "hermite" => Some(Family::Hermite),
            "mix" => Some(Family::Mix),
            "shifted" => Some(Family::Shifted),
            _ => None,
        }
    }
}

/// A parsed field specification: family, complete parameter map, dimension.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldSpec {
    pub family: Family,
    pub params: BTreeMap<String, f64>,
    pub dim: usize,
}

impl FieldSpec {
    /// Parameter lookup; the parser guarantees required keys are present.
    fn param(&self, key: &str) -> f64 {
        self.params[key]
    }

    /// The same spec in dimension `dim`.
    pub fn with_dim(self, dim: usize) -> FieldSpec {
        FieldSpec { dim, ..self }
    }

    /// Instantiate the spec as a scalar field.
    ///
    /// Domain violations (negative mixture weight, fractional Hermite
    /// degree, a one-dimensional family asked for in higher dimension)
    /// surface as parameter errors.
    pub fn build(&self) -> Result<ScalarField> {
        if self.dim == 0 {
            return Err(Error::Parameter(
                "field dimension must be at least 1".into(),
            ));
        }
        let one_dim_only = |family: &str| -> Result<()> {
            if self.dim != 1 {
                return Err(Error::Parameter(format!(
                    "family '{family}' is one-dimensional, got dim {}",
                    self.dim
                )));
            }
            Ok(())
        };
        // Scalar directions act along the first coordinate axis.
        let axis = |v: f64| -> Vec<f64> {
            let mut e = vec![0.0; self.dim];
            e[0] = v;
            e
        };
        match self.family {
            Family::Gauss => fields::gaussian_trial(self.param("a"), self.dim),
            Family::Tilt => fields::exp_tilt(self.param("c"), &axis(self.param("a"))),
            Family::Hermite => {
                one_dim_only("hermite")?;
                let k = self.param("k");
                if k.fract() != 0.0 || !(0.0..=64.0).contains(&k) {
                    return Err(Error::Parameter(format!(
                        "hermite degree must be a small nonnegative integer, got {k}"
                    )));
                }
                fields::hermite_field(k as usize, self.param("eps"))
            }
            Family::Mix => {
                one_dim_only("mix")?;
                fields::gamma_mixture(self.param("eps"), self.param("b"))
            }
            Family::Shifted => {
                let base = fields::gaussian_trial(self.param("base"), self.dim)?;
                fields::shift_tilt(
                    &base,
                    &axis(self.param("x0")),
                    &axis(self.param("a")),
                    self.param("s"),
                )
            }
        }
    }
}

impl fmt::Display for FieldSpec {
    /// Canonical form: keys in the family's documented order, `dim` appended
    /// only when it differs from 1, shortest round-trip number formatting.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(", self.family.name())?;
        let mut first = true;
        for key in self.family.keys() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "{key}={:?}", self.params[*key])?;
            first = false;
        }
        if self.dim != 1 {
            write!(f, ",dim={}", self.dim)?;
        }
        write!(f, ")")
    }
}

/// Parse a field-spec string. See the module docs for the grammar.
pub fn parse_field_spec(s: &str) -> Result<FieldSpec> {
    Parser { s, pos: 0 }.parse()
}

struct Parser<'a> {
    s: &'a str,
    /// Byte cursor; always on a char boundary (tokens are ASCII).
    pos: usize,
}

impl<'a> Parser<'a> {
    fn parse(mut self) -> Result<FieldSpec> {
        self.skip_ws();
        let family_at = self.pos;
        let name = self.ident("family name")?;
        let family = Family::from_name(name)
            .ok_or_else(|| parse_err(family_at, format!("unknown family '{name}'")))?;
        self.expect(b'(')?;
        let mut params: BTreeMap<String, f64> = BTreeMap::new();
        let mut dim: Option<(usize, usize)> = None; // (value, offset)
        loop {
            self.skip_ws();
            let key_at = self.pos;
            let key = self.ident("parameter name")?;
            if params.contains_key(key) || (key == "dim" && dim.is_some()) {
                return Err(parse_err(key_at, format!("duplicate parameter '{key}'")));
            }
            let known = key == "dim" || family.keys().contains(&key);
            if !known {
                return Err(parse_err(
                    key_at,
                    format!("unknown parameter '{key}' for family '{}'", family.name()),
                ));
            }
            self.expect(b'=')?;
            self.skip_ws();
            let value_at = self.pos;
            let value = self.number()?;
            if key == "dim" {
                if value.fract() != 0.0 || !(1.0..=16.0).contains(&value) {
                    return Err(parse_err(
                        value_at,
                        format!("dim must be a positive integer, got {value}"),
                    ));
                }
                dim = Some((value as usize, value_at));
            } else {
                params.insert(key.to_string(), value);
            }
            self.skip_ws();
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                }
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                _ => {
                    return Err(self.unexpected("',' or ')' after parameter value"));
                }
            }
        }
        for key in family.keys() {
            if !params.contains_key(*key) {
                return Err(parse_err(
                    self.pos,
                    format!("family '{}' is missing parameter '{key}'", family.name()),
                ));
            }
        }
        self.skip_ws();
        if self.pos < self.s.len() {
            return Err(self.unexpected("end of input after ')'"));
        }
        Ok(FieldSpec {
            family,
            params,
            dim: dim.map_or(1, |(d, _)| d),
        })
    }

    fn peek(&self) -> Option<u8> {
        self.s.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    /// Error naming what was found at the cursor (or end of input).
    fn unexpected(&self, wanted: &str) -> Error {
        let found = match self.s[self.pos..].chars().next() {
            Some(c) => format!("found {c:?}"),
            None => "found end of input".to_string(),
        };
        parse_err(self.pos, format!("expected {wanted}, {found}"))
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        self.skip_ws();
        if self.peek() == Some(byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("'{}'", byte as char)))
        }
    }

    fn ident(&mut self, what: &str) -> Result<&'a str> {
        let start = self.pos;
        while matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_') {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.unexpected(what));
        }
        Ok(&self.s[start..self.pos])
    }

    /// A decimal or scientific number: optional sign, digits and at most one
    /// point, optional exponent with optional sign.
    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        if matches!(self.peek(), Some(b'+') | Some(b'-')) {
            self.pos += 1;
        }
        while matches!(self.peek(), Some(b) if b.is_ascii_digit() || b == b'.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            while matches!(self.peek(), Some(b) if b.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let text = &self.s[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| parse_err(start, format!("invalid number '{text}'")))?;
        if !value.is_finite() {
            return Err(parse_err(
                start,
                format!("number '{text}' overflows a double"),
            ));
        }
        Ok(value)
    }
}

/// Parse error with a 1-based byte offset.
fn parse_err(pos0: usize, message: String) -> Error {
    Error::Parse {
        offset: pos0 + 1,
        message,
    }
}

/// Parse a comma-separated list of numbers (the `--eps-list`/`--b-list`
/// argument format). Whitespace around entries is insignificant; the list
/// must be non-empty. Offsets in errors are 1-based bytes into the list.
pub fn parse_number_list(s: &str) -> Result<Vec<f64>> {
    let mut p = Parser { s, pos: 0 };
    let mut out = Vec::new();
    loop {
        p.skip_ws();
        let value = p.number()?;
        out.push(value);
        p.skip_ws();
        match p.peek() {
            None => break,
            Some(b',') => {
                p.pos += 1;
            }
            _ => return Err(p.unexpected("',' between numbers")),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s: &str) -> FieldSpec {
        parse_field_spec(s).unwrap()
    }

    fn offset_of(err: Error) -> usize {
        match err {
            Error::Parse { offset, .. } => offset,
            other => panic!("expected a parse error, got {other:?}"),
        }
    }

    #[test]
    fn grammar_instances_parse() {
        let g = spec("gauss(a=0.5)");
        assert_eq!(g.family, Family::Gauss);
        assert_eq!(g.param("a"), 0.5);
        assert_eq!(g.dim, 1);

        let m = spec("mix(eps=1e-2, b=4)");
        assert_eq!(m.family, Family::Mix);
        assert_eq!(m.param("eps"), 0.01);
        assert_eq!(m.param("b"), 4.0);

        let s = spec("  shifted ( base = 0.5 , x0 = 0.3, a = -0.4, s = 1.7 ) ");
        assert_eq!(s.family, Family::Shifted);
        assert_eq!(s.param("x0"), 0.3);
        assert_eq!(s.param("a"), -0.4);

        let h = spec("hermite(k=3,eps=5e-2)");
        assert_eq!(h.param("k"), 3.0);

        let g2 = spec("gauss(a=1,dim=3)");
        assert_eq!(g2.dim, 3);
    }

    #[test]
    fn unclosed_paren_reports_position_past_the_end() {
        // 11 bytes of input; the problem is detected at end of input = 12.
        assert_eq!(offset_of(parse_field_spec("gauss(a=0.5").unwrap_err()), 12);
    }

    #[test]
    fn error_offsets_are_one_based_bytes() {
        assert_eq!(offset_of(parse_field_spec("nope(a=1)").unwrap_err()), 1);
        assert_eq!(offset_of(parse_field_spec("gauss(q=1)").unwrap_err()), 7);
        assert_eq!(
            offset_of(parse_field_spec("gauss(a=1,a=2)").unwrap_err()),
            11
        );
        assert_eq!(offset_of(parse_field_spec("gauss(a=x)").unwrap_err()), 9);
        assert_eq!(offset_of(parse_field_spec("gauss(a=1) x").unwrap_err()), 12);
        assert_eq!(offset_of(parse_field_spec("gauss a=1)").unwrap_err()), 7);
        // Missing parameter is flagged where the list closed.
        assert_eq!(offset_of(parse_field_spec("tilt(c=1)").unwrap_err()), 10);
        assert_eq!(offset_of(parse_field_spec("").unwrap_err()), 1);
    }

    #[test]
    fn semantic_domain_errors_surface_on_build() {
        // The grammar accepts these; the constructors reject them.
        assert!(matches!(
            spec("gauss(a=-1)").build(),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            spec("hermite(k=2.5,eps=0.1)").build(),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            spec("mix(eps=1.5,b=1)").build(),
            Err(Error::Parameter(_))
        ));
        assert!(matches!(
            spec("mix(eps=0.1,b=1,dim=2)").build(),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn oversized_numbers_and_dims_are_rejected_at_parse_time() {
        assert!(parse_field_spec("gauss(a=1e999)").is_err());
        assert!(parse_field_spec("gauss(a=1,dim=0)").is_err());
        assert!(parse_field_spec("gauss(a=1,dim=2.5)").is_err());
        assert!(parse_field_spec("gauss(a=1,dim=1,dim=2)").is_err());
    }

    #[test]
    fn built_fields_have_the_requested_shape() {
        assert_eq!(spec("gauss(a=0.5,dim=2)").build().unwrap().dim(), 2);
        let tilt = spec("tilt(c=1.2,a=0.7,dim=3)").build().unwrap();
        assert_eq!(tilt.dim(), 3);
        // The tilt acts along the first axis only.
        let v0 = tilt.value(&[0.0, 5.0, -5.0]);
        assert!((v0 - 1.2).abs() < 1e-12);
        let mixture = spec("mix(eps=0.3,b=2)").build().unwrap();
        assert!(mixture.value(&[0.0]) > 0.0);
    }

    #[test]
    fn display_is_canonical() {
        assert_eq!(spec("gauss( a = 0.5 )").to_string(), "gauss(a=0.5)");
        assert_eq!(spec("mix(b=4,eps=1e-2)").to_string(), "mix(eps=0.01,b=4.0)");
        assert_eq!(spec("gauss(dim=2,a=1)").to_string(), "gauss(a=1.0,dim=2)");
    }

    #[test]
    fn number_list_parses_and_reports_offsets() {
        assert_eq!(
            parse_number_list("1e-3, 0.5 ,2").unwrap(),
            vec![1e-3, 0.5, 2.0]
        );
        assert_eq!(offset_of(parse_number_list("").unwrap_err()), 1);
        assert_eq!(offset_of(parse_number_list("1,,2").unwrap_err()), 3);
        assert_eq!(offset_of(parse_number_list("1 2").unwrap_err()), 3);
        assert_eq!(offset_of(parse_number_list("1,2,").unwrap_err()), 5);
    }

    fn family_strategy() -> impl Strategy<Value = Family> {
        prop_oneof![
            Just(Family::Gauss),
            Just(Family::Tilt),
            Just(Family::Hermite),
            Just(Family::Mix),
            Just(Family::Shifted),
        ]
    }

    fn value_strategy() -> impl Strategy<Value = f64> {
        prop_oneof![
            -1e6..1e6f64,
            -1.0..1.0f64,
            prop_oneof![Just(1e-300), Just(-1e-300), Just(0.0), Just(12345.678)],
        ]
    }

    proptest! {
        /// Display then reparse is the identity on specs.
        #[test]
        fn round_trip(family in family_strategy(),
                      values in proptest::collection::vec(value_strategy(), 4),
                      dim in 1usize..=3) {
            let params: BTreeMap<String, f64> = family
                .keys()
                .iter()
                .zip(values)
                .map(|(k, v)| (k.to_string(), v))
                .collect();
            let original = FieldSpec { family, params, dim };
            let reparsed = parse_field_spec(&original.to_string()).unwrap();
            prop_assert_eq!(reparsed, original);
        }

        /// The parser never panics, whatever the input.
        #[test]
        fn parser_is_total(s in "\\PC*") {
            let _ = parse_field_spec(&s);
            let _ = parse_number_list(&s);
        }
    }
}
