//! JSON exchange formats with canonical output.
//!
//! Parsing accepts any valid JSON via serde_json; output goes through a small
//! writer that fixes key order, prints floats with 17 significant digits
//! (round-trippable doubles), and serializes exact coefficients as rational
//! strings "num/den". Identical values therefore serialize byte-identically.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::Zero;
use serde_json::Value;
use std::str::FromStr;

use crate::aut::{Atom, AutValue};
use crate::decompose::{Decomposition, ShearField};
use crate::engine::{ParamGen, ParamShear, ParamWord};
use crate::error::{Error, Result};
use crate::interpolate::{CurveFactor, NodeData, ParamAutCurve, ParamFn};
use crate::linalg::Matrix;
use crate::poly::{MultiIndex, Poly};
use crate::polymap::PolyMap;
use crate::scalar::{Backend, Scalar};
use crate::shear::{GroupTag, ShearGen, ShearWord};
use crate::vectorfield::VectorField;

// ---------------------------------------------------------------------------
// Canonical value tree and writer.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub enum JVal {
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Arr(Vec<JVal>),
    Obj(Vec<(&'static str, JVal)>),
}

impl JVal {
    pub fn write(&self, out: &mut String) {
        match self {
            JVal::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            JVal::Int(i) => out.push_str(&i.to_string()),
            JVal::Float(f) => {
                let f = if *f == 0.0 { 0.0 } else { *f };
                out.push_str(&format!("{f:.16e}"));
            }
            JVal::Str(s) => {
                out.push('"');
                for ch in s.chars() {
                    match ch {
                        '"' => out.push_str("\\\""),
                        '\\' => out.push_str("\\\\"),
                        '\n' => out.push_str("\\n"),
                        c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
                        c => out.push(c),
                    }
                }
                out.push('"');
            }
            JVal::Arr(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    item.write(out);
                }
                out.push(']');
            }
            JVal::Obj(fields) => {
                out.push('{');
                for (i, (k, v)) in fields.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push('"');
                    out.push_str(k);
                    out.push_str("\":");
                    v.write(out);
                }
                out.push('}');
            }
        }
    }

    pub fn to_string_canonical(&self) -> String {
        let mut s = String::new();
        self.write(&mut s);
        s.push('\n');
        s
    }
}

// ---------------------------------------------------------------------------
// Parse helpers.
// ---------------------------------------------------------------------------

fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

fn as_obj<'a>(v: &'a Value, what: &str) -> Result<&'a serde_json::Map<String, Value>> {
    v.as_object()
        .ok_or_else(|| invalid(format!("{what}: expected an object")))
}

fn as_arr<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| invalid(format!("{what}: expected an array")))
}

fn get<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, what: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| invalid(format!("{what}: missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| invalid(format!("{what}: expected a non-negative integer")))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n = BigInt::from_str(num.trim()).map_err(|_| invalid(format!("bad rational {s:?}")))?;
    let d = BigInt::from_str(den.trim()).map_err(|_| invalid(format!("bad rational {s:?}")))?;
    if d.is_zero() {
        return Err(invalid(format!("zero denominator in {s:?}")));
    }
    Ok(BigRational::new(n, d))
}

fn rational_string(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

// ---------------------------------------------------------------------------
// Scalars.
// ---------------------------------------------------------------------------

/// [re, im] with numbers (approximate) or "num/den" strings (exact).
pub fn parse_scalar(v: &Value) -> Result<Scalar> {
    let arr = as_arr(v, "scalar")?;
    if arr.len() != 2 {
        return Err(invalid("scalar: expected [re, im]"));
    }
    match (&arr[0], &arr[1]) {
        (Value::String(re), Value::String(im)) => Ok(Scalar::from_rationals(
            parse_rational(re)?,
            parse_rational(im)?,
        )),
        (Value::Number(re), Value::Number(im)) => Ok(Scalar::from_f64(
            re.as_f64().ok_or_else(|| invalid("scalar: bad number"))?,
            im.as_f64().ok_or_else(|| invalid("scalar: bad number"))?,
        )),
        _ => Err(Error::BackendMismatch),
    }
}

pub fn scalar_to_jval(s: &Scalar) -> JVal {
    match s {
        Scalar::Exact(g) => JVal::Arr(vec![
            JVal::Str(rational_string(&g.re)),
            JVal::Str(rational_string(&g.im)),
        ]),
        Scalar::Approx(z) => JVal::Arr(vec![JVal::Float(z.re), JVal::Float(z.im)]),
    }
}

// ---------------------------------------------------------------------------
// Polynomials and maps.
// ---------------------------------------------------------------------------

/// {"n": vars, "backend": "exact"|"approx", "terms": [{"e": [exps], "c":
/// scalar}, ...]} in graded-lex order. The backend field is optional on
/// input when at least one term fixes it.
pub fn parse_poly(v: &Value) -> Result<Poly> {
    let obj = as_obj(v, "poly")?;
    let n = as_usize(get(obj, "n", "poly")?, "poly.n")?;
    let terms = as_arr(get(obj, "terms", "poly")?, "poly.terms")?;
    let mut backend = match obj.get("backend").and_then(|b| b.as_str()) {
        Some("exact") => Some(Backend::Exact),
        Some("approx") => Some(Backend::Approx),
        Some(other) => return Err(invalid(format!("unknown backend {other:?}"))),
        None => None,
    };
    let mut parsed = Vec::with_capacity(terms.len());
    for t in terms {
        let tobj = as_obj(t, "poly term")?;
        let exps = as_arr(get(tobj, "e", "poly term")?, "poly term.e")?
            .iter()
            .map(|x| as_usize(x, "exponent").map(|e| e as u32))
            .collect::<Result<Vec<u32>>>()?;
        if exps.len() != n {
            return Err(Error::VarMismatch {
                expected: n,
                got: exps.len(),
            });
        }
        let c = parse_scalar(get(tobj, "c", "poly term")?)?;
        match backend {
            None => backend = Some(c.backend()),
            Some(b) if b != c.backend() => return Err(Error::BackendMismatch),
            _ => {}
        }
        parsed.push((MultiIndex(exps), c));
    }
    let backend = backend.unwrap_or(Backend::Approx);
    Poly::from_terms(n, backend, parsed)
}

pub fn poly_to_jval(p: &Poly) -> JVal {
    let terms: Vec<JVal> = p
        .terms()
        .map(|(e, c)| {
            JVal::Obj(vec![
                (
                    "e",
                    JVal::Arr(e.0.iter().map(|&x| JVal::Int(x as i64)).collect()),
                ),
                ("c", scalar_to_jval(c)),
            ])
        })
        .collect();
    JVal::Obj(vec![
        ("n", JVal::Int(p.nvars() as i64)),
        (
            "backend",
            JVal::Str(
                match p.backend() {
                    Backend::Exact => "exact",
                    Backend::Approx => "approx",
                }
                .into(),
            ),
        ),
        ("terms", JVal::Arr(terms)),
    ])
}

/// {"n": components, "params": optional, "components": [poly...]}.
pub fn parse_polymap(v: &Value) -> Result<PolyMap> {
    let obj = as_obj(v, "map")?;
    let n = as_usize(get(obj, "n", "map")?, "map.n")?;
    let params = match obj.get("params") {
        Some(p) => as_usize(p, "map.params")?,
        None => 0,
    };
    let comps = as_arr(get(obj, "components", "map")?, "map.components")?
        .iter()
        .map(parse_poly)
        .collect::<Result<Vec<_>>>()?;
    if comps.len() != n {
        return Err(Error::VarMismatch {
            expected: n,
            got: comps.len(),
        });
    }
    PolyMap::with_params(params, comps)
}

pub fn polymap_to_jval(m: &PolyMap) -> JVal {
    let mut fields = vec![("n", JVal::Int(m.n() as i64))];
    if m.params() > 0 {
        fields.push(("params", JVal::Int(m.params() as i64)));
    }
    fields.push((
        "components",
        JVal::Arr(m.components().iter().map(poly_to_jval).collect()),
    ));
    JVal::Obj(fields)
}

/// {"n": vars, "coefficients": [poly...]}.
pub fn parse_vectorfield(v: &Value) -> Result<VectorField> {
    let obj = as_obj(v, "field")?;
    let n = as_usize(get(obj, "n", "field")?, "field.n")?;
    let params = match obj.get("params") {
        Some(p) => as_usize(p, "field.params")?,
        None => 0,
    };
    let coeffs = as_arr(get(obj, "coefficients", "field")?, "field.coefficients")?
        .iter()
        .map(parse_poly)
        .collect::<Result<Vec<_>>>()?;
    if coeffs.len() != n {
        return Err(Error::VarMismatch {
            expected: n,
            got: coeffs.len(),
        });
    }
    VectorField::with_params(params, coeffs)
}

pub fn vectorfield_to_jval(w: &VectorField) -> JVal {
    let mut fields = vec![("n", JVal::Int(w.n() as i64))];
    if w.params() > 0 {
        fields.push(("params", JVal::Int(w.params() as i64)));
    }
    fields.push((
        "coefficients",
        JVal::Arr(w.coeffs().iter().map(poly_to_jval).collect()),
    ));
    JVal::Obj(fields)
}

pub fn parse_matrix(v: &Value) -> Result<Matrix> {
    let rows = as_arr(v, "matrix")?
        .iter()
        .map(|row| {
            as_arr(row, "matrix row")?
                .iter()
                .map(parse_scalar)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Matrix::from_rows(rows)
}

pub fn matrix_to_jval(m: &Matrix) -> JVal {
    JVal::Arr(
        (0..m.n)
            .map(|i| JVal::Arr((0..m.n).map(|j| scalar_to_jval(m.at(i, j))).collect()))
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Words and generators.
// ---------------------------------------------------------------------------

pub fn parse_gen(v: &Value) -> Result<ShearGen> {
    let obj = as_obj(v, "generator")?;
    let kind = get(obj, "kind", "generator")?
        .as_str()
        .ok_or_else(|| invalid("generator.kind must be a string"))?;
    match kind {
        "additive" | "multiplicative" => {
            let l = parse_matrix(get(obj, "L", "generator")?)?;
            let f = parse_poly(get(obj, "f", "generator")?)?;
            let t = parse_scalar(get(obj, "t", "generator")?)?;
            if kind == "additive" {
                ShearGen::additive(l, f, t)
            } else {
                ShearGen::multiplicative(l, f, t)
            }
        }
        "affine" => {
            let a = parse_matrix(get(obj, "A", "generator")?)?;
            let b = as_arr(get(obj, "b", "generator")?, "generator.b")?
                .iter()
                .map(parse_scalar)
                .collect::<Result<Vec<_>>>()?;
            ShearGen::affine(a, b)
        }
        other => Err(invalid(format!("unknown generator kind {other:?}"))),
    }
}

pub fn gen_to_jval(g: &ShearGen) -> JVal {
    match g {
        ShearGen::Additive { conj, profile, t } => JVal::Obj(vec![
            ("kind", JVal::Str("additive".into())),
            ("L", matrix_to_jval(conj)),
            ("f", poly_to_jval(profile)),
            ("t", scalar_to_jval(t)),
        ]),
        ShearGen::Multiplicative { conj, profile, t } => JVal::Obj(vec![
            ("kind", JVal::Str("multiplicative".into())),
            ("L", matrix_to_jval(conj)),
            ("f", poly_to_jval(profile)),
            ("t", scalar_to_jval(t)),
        ]),
        ShearGen::Affine { a, b } => JVal::Obj(vec![
            ("kind", JVal::Str("affine".into())),
            ("A", matrix_to_jval(a)),
            ("b", JVal::Arr(b.iter().map(scalar_to_jval).collect())),
        ]),
    }
}

/// {"n":..., "group_tag":..., "generators":[...]}.
pub fn parse_word(v: &Value) -> Result<ShearWord> {
    let obj = as_obj(v, "word")?;
    let n = as_usize(get(obj, "n", "word")?, "word.n")?;
    let tag = GroupTag::parse(
        get(obj, "group_tag", "word")?
            .as_str()
            .ok_or_else(|| invalid("word.group_tag must be a string"))?,
    )?;
    let gens = as_arr(get(obj, "generators", "word")?, "word.generators")?
        .iter()
        .map(parse_gen)
        .collect::<Result<Vec<_>>>()?;
    let backend = gens.first().map(|g| g.backend()).unwrap_or(Backend::Approx);
    ShearWord::from_gens(n, backend, tag, gens)
}

pub fn word_to_jval(w: &ShearWord) -> JVal {
    JVal::Obj(vec![
        ("n", JVal::Int(w.n() as i64)),
        ("group_tag", JVal::Str(w.tag.as_str().into())),
        (
            "generators",
            JVal::Arr(w.gens().iter().map(gen_to_jval).collect()),
        ),
    ])
}

/// A target automorphism: {"type":"word", ...} or {"type":"map", ...}.
pub fn parse_aut(v: &Value) -> Result<AutValue> {
    let obj = as_obj(v, "automorphism")?;
    match get(obj, "type", "automorphism")?.as_str() {
        Some("word") => Ok(AutValue::from_word(parse_word(v)?)),
        Some("map") => Ok(AutValue::from_map(parse_polymap(v)?)),
        _ => Err(invalid("automorphism.type must be \"word\" or \"map\"")),
    }
}

pub fn aut_to_jval(a: &AutValue) -> JVal {
    JVal::Obj(vec![
        ("n", JVal::Int(a.n() as i64)),
        (
            "atoms",
            JVal::Arr(
                a.atoms()
                    .iter()
                    .map(|atom| match atom {
                        Atom::Word(w) => JVal::Obj(vec![
                            ("type", JVal::Str("word".into())),
                            ("word", word_to_jval(w)),
                        ]),
                        Atom::Map(m) => JVal::Obj(vec![
                            ("type", JVal::Str("map".into())),
                            ("map", polymap_to_jval(m)),
                        ]),
                        Atom::ScaledWord { word, t } => JVal::Obj(vec![
                            ("type", JVal::Str("scaled_word".into())),
                            ("word", word_to_jval(word)),
                            ("t", scalar_to_jval(t)),
                        ]),
                    })
                    .collect(),
            ),
        ),
    ])
}

pub fn parse_aut_value(v: &Value) -> Result<AutValue> {
    let obj = as_obj(v, "aut value")?;
    let n = as_usize(get(obj, "n", "aut value")?, "aut value.n")?;
    let atoms = as_arr(get(obj, "atoms", "aut value")?, "aut value.atoms")?;
    let mut backend = None;
    let mut parsed = Vec::with_capacity(atoms.len());
    for a in atoms {
        let aobj = as_obj(a, "atom")?;
        let atom = match get(aobj, "type", "atom")?.as_str() {
            Some("word") => Atom::Word(parse_word(get(aobj, "word", "atom")?)?),
            Some("map") => Atom::Map(parse_polymap(get(aobj, "map", "atom")?)?),
            Some("scaled_word") => Atom::ScaledWord {
                word: parse_word(get(aobj, "word", "atom")?)?,
                t: parse_scalar(get(aobj, "t", "atom")?)?,
            },
            _ => return Err(invalid("unknown atom type")),
        };
        let b = match &atom {
            Atom::Word(w) => w.backend(),
            Atom::Map(m) => m.backend(),
            Atom::ScaledWord { word, .. } => word.backend(),
        };
        match backend {
            None => backend = Some(b),
            Some(prev) if prev != b => return Err(Error::BackendMismatch),
            _ => {}
        }
        parsed.push(atom);
    }
    let backend = backend.unwrap_or(Backend::Approx);
    let mut out = AutValue::identity(n, backend);
    for a in parsed {
        out.push(a);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Shear fields and decompositions.
// ---------------------------------------------------------------------------

fn parse_scalar_vec(v: &Value, what: &str) -> Result<Vec<Scalar>> {
    as_arr(v, what)?.iter().map(parse_scalar).collect()
}

fn scalar_vec_to_jval(v: &[Scalar]) -> JVal {
    JVal::Arr(v.iter().map(scalar_to_jval).collect())
}

pub fn parse_shear_field(v: &Value) -> Result<ShearField> {
    let obj = as_obj(v, "shear field")?;
    match get(obj, "kind", "shear field")?.as_str() {
        Some("additive") => Ok(ShearField::Additive {
            lambda: parse_scalar_vec(get(obj, "lambda", "shear field")?, "lambda")?,
            b: parse_scalar_vec(get(obj, "b", "shear field")?, "b")?,
            profile: parse_poly(get(obj, "profile", "shear field")?)?,
        }),
        Some("multiplicative") => Ok(ShearField::MultiplicativeType {
            lambda: parse_scalar_vec(get(obj, "lambda", "shear field")?, "lambda")?,
            mu: parse_scalar_vec(get(obj, "mu", "shear field")?, "mu")?,
            v: parse_scalar_vec(get(obj, "v", "shear field")?, "v")?,
            d: as_usize(get(obj, "d", "shear field")?, "d")? as u32,
            c: parse_scalar(get(obj, "c", "shear field")?)?,
        }),
        _ => Err(invalid(
            "shear field kind must be additive or multiplicative",
        )),
    }
}

pub fn shear_field_to_jval(s: &ShearField) -> JVal {
    match s {
        ShearField::Additive { lambda, b, profile } => JVal::Obj(vec![
            ("kind", JVal::Str("additive".into())),
            ("lambda", scalar_vec_to_jval(lambda)),
            ("b", scalar_vec_to_jval(b)),
            ("profile", poly_to_jval(profile)),
        ]),
        ShearField::MultiplicativeType {
            lambda,
            mu,
            v,
            d,
            c,
        } => JVal::Obj(vec![
            ("kind", JVal::Str("multiplicative".into())),
            ("lambda", scalar_vec_to_jval(lambda)),
            ("mu", scalar_vec_to_jval(mu)),
            ("v", scalar_vec_to_jval(v)),
            ("d", JVal::Int(*d as i64)),
            ("c", scalar_to_jval(c)),
        ]),
    }
}

pub fn decomposition_to_jval(d: &Decomposition) -> JVal {
    JVal::Obj(vec![
        ("n", JVal::Int(d.residual.n() as i64)),
        (
            "summands",
            JVal::Arr(d.summands.iter().map(shear_field_to_jval).collect()),
        ),
        ("residual", vectorfield_to_jval(&d.residual)),
    ])
}

// ---------------------------------------------------------------------------
// Parameterized words.
// ---------------------------------------------------------------------------

pub fn param_word_to_jval(w: &ParamWord) -> JVal {
    let gens: Vec<JVal> = w
        .gens
        .iter()
        .map(|g| match g {
            ParamGen::Shear(ParamShear { base, time }) => {
                let (kind, conj, profile) = match base {
                    ShearGen::Additive { conj, profile, .. } => ("additive", conj, profile),
                    ShearGen::Multiplicative { conj, profile, .. } => {
                        ("multiplicative", conj, profile)
                    }
                    ShearGen::Affine { .. } => unreachable!("affine bases carry no time"),
                };
                JVal::Obj(vec![
                    ("kind", JVal::Str(kind.into())),
                    ("L", matrix_to_jval(conj)),
                    ("f", poly_to_jval(profile)),
                    ("t_poly", poly_to_jval(time)),
                ])
            }
            ParamGen::Affine {
                matrix,
                translation,
            } => JVal::Obj(vec![
                ("kind", JVal::Str("affine_param".into())),
                (
                    "A",
                    JVal::Arr(
                        matrix
                            .iter()
                            .map(|row| JVal::Arr(row.iter().map(poly_to_jval).collect()))
                            .collect(),
                    ),
                ),
                (
                    "b",
                    JVal::Arr(translation.iter().map(poly_to_jval).collect()),
                ),
            ]),
        })
        .collect();
    JVal::Obj(vec![
        ("n", JVal::Int(w.n as i64)),
        ("group_tag", JVal::Str(w.tag.as_str().into())),
        ("generators", JVal::Arr(gens)),
    ])
}

pub fn parse_param_word(v: &Value) -> Result<ParamWord> {
    let obj = as_obj(v, "param word")?;
    let n = as_usize(get(obj, "n", "param word")?, "param word.n")?;
    let tag = GroupTag::parse(
        get(obj, "group_tag", "param word")?
            .as_str()
            .ok_or_else(|| invalid("param word.group_tag must be a string"))?,
    )?;
    let mut gens = Vec::new();
    let mut backend = None;
    for g in as_arr(get(obj, "generators", "param word")?, "generators")? {
        let gobj = as_obj(g, "param generator")?;
        let kind = get(gobj, "kind", "param generator")?
            .as_str()
            .ok_or_else(|| invalid("param generator.kind must be a string"))?;
        let gen = match kind {
            "additive" | "multiplicative" => {
                let l = parse_matrix(get(gobj, "L", "param generator")?)?;
                let f = parse_poly(get(gobj, "f", "param generator")?)?;
                let t = parse_poly(get(gobj, "t_poly", "param generator")?)?;
                let one = Scalar::one(l.backend());
                let base = if kind == "additive" {
                    ShearGen::Additive {
                        conj: l,
                        profile: f,
                        t: one,
                    }
                } else {
                    ShearGen::multiplicative(l, f, one)?
                };
                ParamGen::Shear(ParamShear { base, time: t })
            }
            "affine_param" => {
                let matrix = as_arr(get(gobj, "A", "param generator")?, "A")?
                    .iter()
                    .map(|row| {
                        as_arr(row, "A row")?
                            .iter()
                            .map(parse_poly)
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                let translation = as_arr(get(gobj, "b", "param generator")?, "b")?
                    .iter()
                    .map(parse_poly)
                    .collect::<Result<Vec<_>>>()?;
                ParamGen::Affine {
                    matrix,
                    translation,
                }
            }
            other => return Err(invalid(format!("unknown param generator kind {other:?}"))),
        };
        let b = match &gen {
            ParamGen::Shear(ps) => ps.base.backend(),
            ParamGen::Affine { matrix, .. } => matrix[0][0].backend(),
        };
        match backend {
            None => backend = Some(b),
            Some(prev) if prev != b => return Err(Error::BackendMismatch),
            _ => {}
        }
        gens.push(gen);
    }
    Ok(ParamWord {
        n,
        backend: backend.unwrap_or(Backend::Approx),
        tag,
        gens,
    })
}

// ---------------------------------------------------------------------------
// Node data and curves.
// ---------------------------------------------------------------------------

pub fn parse_node_data(v: &Value) -> Result<NodeData> {
    let obj = as_obj(v, "node data")?;
    let n = as_usize(get(obj, "n", "node data")?, "node data.n")?;
    let tag = GroupTag::parse(
        get(obj, "tag", "node data")?
            .as_str()
            .ok_or_else(|| invalid("node data.tag must be a string"))?,
    )?;
    let nodes = parse_scalar_vec(get(obj, "nodes", "node data")?, "nodes")?;
    let targets = as_arr(get(obj, "targets", "node data")?, "targets")?
        .iter()
        .map(parse_aut)
        .collect::<Result<Vec<_>>>()?;
    let data = NodeData {
        n,
        tag,
        nodes,
        targets,
    };
    data.validate()?;
    Ok(data)
}

pub fn param_fn_to_jval(f: &ParamFn) -> JVal {
    match f {
        ParamFn::Poly(p) => JVal::Obj(vec![("poly", poly_to_jval(p))]),
        ParamFn::Unit { log } => JVal::Obj(vec![("unit_log", poly_to_jval(log))]),
    }
}

pub fn parse_param_fn(v: &Value) -> Result<ParamFn> {
    let obj = as_obj(v, "param fn")?;
    if let Some(p) = obj.get("poly") {
        return Ok(ParamFn::Poly(parse_poly(p)?));
    }
    if let Some(p) = obj.get("unit_log") {
        return Ok(ParamFn::Unit {
            log: parse_poly(p)?,
        });
    }
    Err(invalid("param fn needs \"poly\" or \"unit_log\""))
}

pub fn curve_factor_to_jval(f: &CurveFactor) -> JVal {
    match f {
        CurveFactor::Translation { b } => JVal::Obj(vec![
            ("kind", JVal::Str("translation".into())),
            ("b", JVal::Arr(b.iter().map(poly_to_jval).collect())),
        ]),
        CurveFactor::Transvection { i, j, c } => JVal::Obj(vec![
            ("kind", JVal::Str("transvection".into())),
            ("i", JVal::Int(*i as i64)),
            ("j", JVal::Int(*j as i64)),
            ("c", poly_to_jval(c)),
        ]),
        CurveFactor::DiagonalUnit { i, log } => JVal::Obj(vec![
            ("kind", JVal::Str("diagonal_unit".into())),
            ("i", JVal::Int(*i as i64)),
            ("log", poly_to_jval(log)),
        ]),
        CurveFactor::ScaledCurve { theta, h } => JVal::Obj(vec![
            ("kind", JVal::Str("scaled_curve".into())),
            ("theta", aut_to_jval(theta)),
            ("h", poly_to_jval(h)),
        ]),
        CurveFactor::PlanarElementary { a, b, c, p } => JVal::Obj(vec![
            ("kind", JVal::Str("planar_elementary".into())),
            ("a", param_fn_to_jval(a)),
            ("b", param_fn_to_jval(b)),
            ("c", param_fn_to_jval(c)),
            ("p", JVal::Arr(p.iter().map(param_fn_to_jval).collect())),
        ]),
        CurveFactor::ScaledFamily { factors, h } => JVal::Obj(vec![
            ("kind", JVal::Str("scaled_family".into())),
            (
                "factors",
                JVal::Arr(factors.iter().map(curve_factor_to_jval).collect()),
            ),
            ("h", poly_to_jval(h)),
        ]),
    }
}

pub fn parse_curve_factor(v: &Value) -> Result<CurveFactor> {
    let obj = as_obj(v, "curve factor")?;
    match get(obj, "kind", "curve factor")?.as_str() {
        Some("translation") => Ok(CurveFactor::Translation {
            b: as_arr(get(obj, "b", "factor")?, "b")?
                .iter()
                .map(parse_poly)
                .collect::<Result<Vec<_>>>()?,
        }),
        Some("transvection") => Ok(CurveFactor::Transvection {
            i: as_usize(get(obj, "i", "factor")?, "i")?,
            j: as_usize(get(obj, "j", "factor")?, "j")?,
            c: parse_poly(get(obj, "c", "factor")?)?,
        }),
        Some("diagonal_unit") => Ok(CurveFactor::DiagonalUnit {
            i: as_usize(get(obj, "i", "factor")?, "i")?,
            log: parse_poly(get(obj, "log", "factor")?)?,
        }),
        Some("scaled_curve") => Ok(CurveFactor::ScaledCurve {
            theta: parse_aut_value(get(obj, "theta", "factor")?)?,
            h: parse_poly(get(obj, "h", "factor")?)?,
        }),
        Some("planar_elementary") => Ok(CurveFactor::PlanarElementary {
            a: parse_param_fn(get(obj, "a", "factor")?)?,
            b: parse_param_fn(get(obj, "b", "factor")?)?,
            c: parse_param_fn(get(obj, "c", "factor")?)?,
            p: as_arr(get(obj, "p", "factor")?, "p")?
                .iter()
                .map(parse_param_fn)
                .collect::<Result<Vec<_>>>()?,
        }),
        Some("scaled_family") => Ok(CurveFactor::ScaledFamily {
            factors: as_arr(get(obj, "factors", "factor")?, "factors")?
                .iter()
                .map(parse_curve_factor)
                .collect::<Result<Vec<_>>>()?,
            h: parse_poly(get(obj, "h", "factor")?)?,
        }),
        _ => Err(invalid("unknown curve factor kind")),
    }
}

pub fn curve_to_jval(c: &ParamAutCurve) -> JVal {
    JVal::Obj(vec![
        ("n", JVal::Int(c.n as i64)),
        ("tag", JVal::Str(c.tag.as_str().into())),
        (
            "factors",
            JVal::Arr(c.factors.iter().map(curve_factor_to_jval).collect()),
        ),
    ])
}

pub fn parse_curve(v: &Value) -> Result<ParamAutCurve> {
    let obj = as_obj(v, "curve")?;
    let n = as_usize(get(obj, "n", "curve")?, "curve.n")?;
    let tag = GroupTag::parse(
        get(obj, "tag", "curve")?
            .as_str()
            .ok_or_else(|| invalid("curve.tag must be a string"))?,
    )?;
    let factors = as_arr(get(obj, "factors", "curve")?, "curve.factors")?
        .iter()
        .map(parse_curve_factor)
        .collect::<Result<Vec<_>>>()?;
    // Backend from the first polynomial found; default approximate.
    let backend = factors
        .iter()
        .find_map(factor_backend)
        .unwrap_or(Backend::Approx);
    Ok(ParamAutCurve {
        n,
        backend,
        tag,
        factors,
    })
}

fn factor_backend(f: &CurveFactor) -> Option<Backend> {
    match f {
        CurveFactor::Translation { b } => b.first().map(|p| p.backend()),
        CurveFactor::Transvection { c, .. } => Some(c.backend()),
        CurveFactor::DiagonalUnit { log, .. } => Some(log.backend()),
        CurveFactor::ScaledCurve { h, .. } => Some(h.backend()),
        CurveFactor::PlanarElementary { a, .. } => Some(a.backend()),
        CurveFactor::ScaledFamily { factors, h } => factors
            .iter()
            .find_map(factor_backend)
            .or(Some(h.backend())),
    }
}

// ---------------------------------------------------------------------------
// Planar factorizations.
// ---------------------------------------------------------------------------

pub fn factorization_to_jval(f: &crate::planar::Factorization) -> JVal {
    let factors: Vec<JVal> = f
        .factors
        .iter()
        .map(|x| match x {
            crate::planar::PlanarFactor::Affine { a, b } => JVal::Obj(vec![
                ("kind", JVal::Str("affine".into())),
                ("A", matrix_to_jval(a)),
                ("b", scalar_vec_to_jval(b)),
            ]),
            crate::planar::PlanarFactor::Elementary(e) => JVal::Obj(vec![
                ("kind", JVal::Str("elementary".into())),
                ("a", scalar_to_jval(&e.a)),
                ("b", scalar_to_jval(&e.b)),
                ("c", scalar_to_jval(&e.c)),
                ("p", poly_to_jval(&e.p)),
            ]),
        })
        .collect();
    JVal::Obj(vec![
        ("n", JVal::Int(2)),
        ("certified", JVal::Bool(f.certified)),
        ("factors", JVal::Arr(factors)),
    ])
}
