//! Stochastic VAS / CRN models, reachability properties and their CTMC semantics.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::Deref;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{rat, Rat, RatMatrix, RatVector};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Species {
    pub index: usize,
    pub name: String,
}

/// Positive decimal rate constant, kept both as the exact decimal
/// `mantissa · 10^exp10` and as its nearest binary64 value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateConst {
    value: f64,
    mantissa: u64,
    exp10: i32,
}

impl RateConst {
    pub fn parse(text: &str) -> Option<Self> {
        let value: f64 = text.parse().ok()?;
        if !value.is_finite() || value <= 0.0 {
            return None;
        }
        let (mantissa, exp10) = parse_decimal(text)?;
        Some(Self {
            value,
            mantissa,
            exp10,
        })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// `k · combos`, rounded once to binary64 whenever both factors are exact.
    fn times(&self, combos: u64) -> f64 {
        const EXACT: u64 = 1 << 53;
        const POW10: [f64; 23] = [
            1e0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e10, 1e11, 1e12, 1e13, 1e14, 1e15,
            1e16, 1e17, 1e18, 1e19, 1e20, 1e21, 1e22,
        ];
        if let Some(n) = self.mantissa.checked_mul(combos) {
            let e = self.exp10.unsigned_abs() as usize;
            if n < EXACT && e < POW10.len() {
                return if self.exp10 < 0 {
                    n as f64 / POW10[e]
                } else {
                    n as f64 * POW10[e]
                };
            }
        }
        self.value * combos as f64
    }
}

impl fmt::Display for RateConst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// Splits a decimal literal such as `4.00e-4` into a trailing-zero-free `(4, -4)`.
fn parse_decimal(text: &str) -> Option<(u64, i32)> {
    let t = text.trim().trim_start_matches('+');
    let (body, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = format!("{int_part}{frac_part}");
    if !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = digits.trim_start_matches('0');
    let mut exp = exp - frac_part.len() as i32;
    if digits.is_empty() {
        return Some((0, 0));
    }
    let trimmed = digits.trim_end_matches('0');
    exp += (digits.len() - trimmed.len()) as i32;
    Some((trimmed.parse::<u64>().ok()?, exp))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reaction {
    pub index: usize,
    pub name: String,
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    pub rate: RateConst,
    /// `products − reactants`
    pub update: Vec<i64>,
}

impl Reaction {
    pub fn rate_const(&self) -> f64 {
        self.rate.value()
    }
}

/// Vector of molecule counts, one entry per species.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct State(Vec<i64>);

impl State {
    pub fn new(counts: Vec<i64>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[i64] {
        &self.0
    }

    pub fn is_valid(&self) -> bool {
        self.0.iter().all(|&x| x >= 0)
    }

    pub fn to_rat(&self) -> RatVector {
        self.0.iter().map(|&x| rat(x)).collect()
    }

    pub fn apply(&self, update: &[i64]) -> State {
        State(self.0.iter().zip(update).map(|(a, b)| a + b).collect())
    }
}

impl Deref for State {
    type Target = [i64];

    fn deref(&self) -> &[i64] {
        &self.0
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cells: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        write!(f, "[{}]", cells.join(", "))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VasModel {
    pub species: Vec<Species>,
    pub reactions: Vec<Reaction>,
    pub initial: State,
}

impl VasModel {
    /// Number of species.
    pub fn m(&self) -> usize {
        self.species.len()
    }

    /// Number of reactions.
    pub fn n(&self) -> usize {
        self.reactions.len()
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s.name == name)
    }

    pub fn reaction_index(&self, name: &str) -> Option<usize> {
        self.reactions.iter().position(|r| r.name == name)
    }

    /// `m × n` matrix whose column `i` is the update vector of reaction `i`.
    pub fn update_matrix(&self) -> RatMatrix {
        let cols: Vec<RatVector> = self
            .reactions
            .iter()
            .map(|r| r.update.iter().map(|&x| rat(x)).collect())
            .collect();
        RatMatrix::from_columns(self.m(), &cols)
    }

    pub fn update_vector(&self, i: usize) -> RatVector {
        self.reactions[i].update.iter().map(|&x| rat(x)).collect()
    }

    /// Mass-action propensity `k_i · Π_j s[j]·(s[j]−1)···(s[j]−r_j+1)`.
    pub fn propensity(&self, i: usize, s: &[i64]) -> f64 {
        let r = &self.reactions[i];
        let mut combos: u64 = 1;
        for (&count, &stoich) in s.iter().zip(&r.reactants) {
            for t in 0..stoich as i64 {
                let factor = count - t;
                if factor <= 0 {
                    return 0.0;
                }
                combos = match combos.checked_mul(factor as u64) {
                    Some(c) => c,
                    None => return self.propensity_float(i, s),
                };
            }
        }
        r.rate.times(combos)
    }

    fn propensity_float(&self, i: usize, s: &[i64]) -> f64 {
        let r = &self.reactions[i];
        let mut p = r.rate.value();
        for (&count, &stoich) in s.iter().zip(&r.reactants) {
            for t in 0..stoich as i64 {
                p *= (count - t) as f64;
            }
        }
        p
    }

    pub fn is_enabled(&self, i: usize, s: &[i64]) -> bool {
        self.reactions[i]
            .reactants
            .iter()
            .zip(s)
            .all(|(&need, &have)| have >= need as i64)
    }

    /// Enabled reactions at `s` in ascending index order, with their rates and successors.
    pub fn enabled_successors(&self, s: &State) -> Vec<Successor> {
        (0..self.n())
            .filter_map(|i| {
                let rate = self.propensity(i, s);
                (rate > 0.0).then(|| Successor {
                    reaction: i,
                    rate,
                    state: s.apply(&self.reactions[i].update),
                })
            })
            .collect()
    }

    pub fn exit_rate(&self, s: &State) -> f64 {
        self.enabled_successors(s).iter().map(|t| t.rate).sum()
    }
}

/// One outgoing CTMC edge.
#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub reaction: usize,
    pub rate: f64,
    pub state: State,
}

/// `S_target = beta + Σ coeffs[k]·S_k`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubstateFormula {
    pub target: usize,
    pub coeffs: BTreeMap<usize, Rat>,
    pub beta: u64,
}

impl SubstateFormula {
    pub fn equality(target: usize, beta: u64) -> Self {
        Self {
            target,
            coeffs: BTreeMap::new(),
            beta,
        }
    }

    /// Value the right-hand side takes at `s`.
    pub fn rhs(&self, s: &[i64]) -> Rat {
        self.coeffs
            .iter()
            .fold(rat(self.beta as i64), |acc, (&k, a)| acc + a * rat(s[k]))
    }

    pub fn holds(&self, s: &[i64]) -> bool {
        rat(s[self.target]) == self.rhs(s)
    }
}

/// Time-bounded reachability `P=? [ F<=T (Ψ_1 ∧ … ∧ Ψ_l) ]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropertySpec {
    pub substates: Vec<SubstateFormula>,
    pub time_bound: f64,
}

impl PropertySpec {
    pub fn satisfies(&self, s: &[i64]) -> bool {
        self.substates.iter().all(|f| f.holds(s))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

struct LineCtx<'a> {
    number: usize,
    raw: &'a str,
}

impl LineCtx<'_> {
    fn err_at(&self, token: &str, message: impl Into<String>) -> ParseError {
        // token is a subslice of raw whenever we can find it
        let column = self.raw.find(token).map_or(1, |c| c + 1);
        ParseError {
            line: self.number,
            column,
            message: message.into(),
        }
    }
}

/// Parses the line-oriented model format described in the README.
pub fn parse_model(text: &str) -> Result<(VasModel, PropertySpec), ParseError> {
    let mut species: Option<Vec<Species>> = None;
    let mut names: HashMap<String, usize> = HashMap::new();
    let mut init: Option<Vec<i64>> = None;
    let mut time: Option<f64> = None;
    let mut substates = Vec::new();
    let mut reactions: Vec<Reaction> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        last_line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let ctx = LineCtx {
            number: idx + 1,
            raw,
        };
        let Some((key, rest)) = content.split_once(':') else {
            return Err(ctx.err_at(content.trim(), "expected `<keyword>: ...`"));
        };
        let key = key.trim();
        match key {
            "species" => {
                if species.is_some() {
                    return Err(ctx.err_at(key, "duplicate species line"));
                }
                let mut list = Vec::new();
                for name in rest.split_whitespace() {
                    if !is_identifier(name) {
                        return Err(ctx.err_at(name, format!("invalid species name `{name}`")));
                    }
                    if names.insert(name.to_string(), list.len()).is_some() {
                        return Err(ctx.err_at(name, format!("duplicate species `{name}`")));
                    }
                    list.push(Species {
                        index: list.len(),
                        name: name.to_string(),
                    });
                }
                if list.is_empty() {
                    return Err(ctx.err_at(key, "species list is empty"));
                }
                species = Some(list);
            }
            "init" => {
                let Some(sp) = &species else {
                    return Err(ctx.err_at(key, "`init` must follow the species line"));
                };
                if init.is_some() {
                    return Err(ctx.err_at(key, "duplicate init line"));
                }
                let mut counts = Vec::new();
                for tok in rest.split_whitespace() {
                    let v: i64 = tok
                        .parse()
                        .map_err(|_| ctx.err_at(tok, format!("invalid initial count `{tok}`")))?;
                    if v < 0 {
                        return Err(ctx.err_at(tok, format!("negative initial count {v}")));
                    }
                    counts.push(v);
                }
                if counts.len() != sp.len() {
                    return Err(ctx.err_at(
                        key,
                        format!(
                            "init has {} values but there are {} species",
                            counts.len(),
                            sp.len()
                        ),
                    ));
                }
                init = Some(counts);
            }
            "time" => {
                if time.is_some() {
                    return Err(ctx.err_at(key, "duplicate time line"));
                }
                let tok = rest.trim();
                let t: f64 = tok
                    .parse()
                    .map_err(|_| ctx.err_at(tok, format!("invalid time bound `{tok}`")))?;
                if !t.is_finite() || t < 0.0 {
                    return Err(ctx.err_at(tok, "time bound must be a nonnegative number"));
                }
                time = Some(t);
            }
            "target" => {
                if species.is_none() {
                    return Err(ctx.err_at(key, "`target` must follow the species line"));
                }
                substates.push(parse_target(&ctx, rest, &names)?);
            }
            "reaction" => {
                let Some(sp) = &species else {
                    return Err(ctx.err_at(key, "`reaction` must follow the species line"));
                };
                let r = parse_reaction(&ctx, rest, &names, sp.len(), reactions.len())?;
                if reactions.iter().any(|o| o.name == r.name) {
                    return Err(ctx.err_at(&r.name, format!("duplicate reaction `{}`", r.name)));
                }
                reactions.push(r);
            }
            other => return Err(ctx.err_at(other, format!("unknown keyword `{other}`"))),
        }
    }

    let missing = |what: &str| ParseError {
        line: last_line.max(1),
        column: 1,
        message: format!("missing `{what}` line"),
    };
    let species = species.ok_or_else(|| missing("species"))?;
    let init = init.ok_or_else(|| missing("init"))?;
    let time_bound = time.ok_or_else(|| missing("time"))?;
    if substates.is_empty() {
        return Err(missing("target"));
    }
    if reactions.is_empty() {
        return Err(missing("reaction"));
    }
    Ok((
        VasModel {
            species,
            reactions,
            initial: State::new(init),
        },
        PropertySpec {
            substates,
            time_bound,
        },
    ))
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_target(
    ctx: &LineCtx<'_>,
    rest: &str,
    names: &HashMap<String, usize>,
) -> Result<SubstateFormula, ParseError> {
    let Some((lhs, rhs)) = rest.split_once('=') else {
        return Err(ctx.err_at(
            rest.trim(),
            "target must have the form `<species> = <int> [+ <rat>*<species> ...]`",
        ));
    };
    let lhs = lhs.trim();
    if lhs.is_empty() {
        return Err(ctx.err_at("=", "empty target"));
    }
    let target = *names
        .get(lhs)
        .ok_or_else(|| ctx.err_at(lhs, format!("unknown species `{lhs}` in target")))?;
    let mut beta: Option<u64> = None;
    let mut coeffs: BTreeMap<usize, Rat> = BTreeMap::new();
    for term in rhs.split('+') {
        let term = term.trim();
        if term.is_empty() {
            return Err(ctx.err_at(rhs.trim(), "empty term in target"));
        }
        let (coef_text, name) = match term.split_once('*') {
            Some((c, n)) => (Some(c.trim()), n.trim()),
            None if term.starts_with(|c: char| c.is_ascii_digit()) => {
                if beta.is_some() {
                    return Err(ctx.err_at(term, "target has more than one constant term"));
                }
                let b: u64 = term.parse().map_err(|_| {
                    ctx.err_at(
                        term,
                        format!("constant `{term}` is not a nonnegative integer"),
                    )
                })?;
                beta = Some(b);
                continue;
            }
            None => (None, term),
        };
        let k = *names
            .get(name)
            .ok_or_else(|| ctx.err_at(name, format!("unknown species `{name}` in target")))?;
        if k == target {
            return Err(ctx.err_at(
                name,
                "target species cannot appear on its own right-hand side",
            ));
        }
        let alpha = match coef_text {
            Some(c) => parse_rational(c)
                .ok_or_else(|| ctx.err_at(c, format!("invalid coefficient `{c}`")))?,
            None => rat(1),
        };
        if alpha.is_negative() {
            return Err(ctx.err_at(term, "coefficients must be nonnegative"));
        }
        let entry = coeffs.entry(k).or_insert_with(Rat::zero);
        *entry += alpha;
    }
    coeffs.retain(|_, a| !a.is_zero());
    Ok(SubstateFormula {
        target,
        coeffs,
        beta: beta.unwrap_or(0),
    })
}

/// `3`, `1/2` or `0.25`.
pub fn parse_rational(text: &str) -> Option<Rat> {
    if let Some((n, d)) = text.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if text.contains(['.', 'e', 'E']) {
        let (mantissa, exp) = parse_decimal(text)?;
        let m = Rat::from_integer(BigInt::from(mantissa));
        let p = Rat::from_integer(BigInt::from(10).pow(exp.unsigned_abs()));
        return Some(if exp < 0 { m / p } else { m * p });
    }
    text.trim().parse::<BigInt>().ok().map(Rat::from_integer)
}

fn parse_reaction(
    ctx: &LineCtx<'_>,
    rest: &str,
    names: &HashMap<String, usize>,
    m: usize,
    index: usize,
) -> Result<Reaction, ParseError> {
    let Some((name, body)) = rest.split_once(':') else {
        return Err(ctx.err_at(
            rest.trim(),
            "reaction must have the form `<name> : <lhs> -> <rhs> @ <rate>`",
        ));
    };
    let name = name.trim();
    if !is_identifier(name) {
        return Err(ctx.err_at(name, format!("invalid reaction name `{name}`")));
    }
    let Some((sides, rate_text)) = body.split_once('@') else {
        return Err(ctx.err_at(body.trim(), "missing `@ <rate>`"));
    };
    let Some((lhs, rhs)) = sides.split_once("->") else {
        return Err(ctx.err_at(sides.trim(), "missing `->`"));
    };
    let rate_text = rate_text.trim();
    let rate = RateConst::parse(rate_text).ok_or_else(|| {
        ctx.err_at(
            rate_text,
            format!("rate constant `{rate_text}` must be a positive decimal"),
        )
    })?;
    let reactants = parse_side(ctx, lhs, names, m)?;
    let products = parse_side(ctx, rhs, names, m)?;
    let update = products
        .iter()
        .zip(&reactants)
        .map(|(&p, &r)| p as i64 - r as i64)
        .collect();
    Ok(Reaction {
        index,
        name: name.to_string(),
        reactants,
        products,
        rate,
        update,
    })
}

fn parse_side(
    ctx: &LineCtx<'_>,
    side: &str,
    names: &HashMap<String, usize>,
    m: usize,
) -> Result<Vec<u32>, ParseError> {
    let mut counts = vec![0u32; m];
    let side = side.trim();
    if side == "0" {
        return Ok(counts);
    }
    if side.is_empty() {
        return Err(ctx.err_at("->", "empty reaction side (use `0`)"));
    }
    for term in side.split('+') {
        let term = term.trim();
        let (k, name) = match term.split_once('*') {
            Some((k, n)) => {
                let k = k.trim();
                let k: u32 = k
                    .parse()
                    .ok()
                    .filter(|&k| k > 0)
                    .ok_or_else(|| ctx.err_at(k, format!("invalid stoichiometry `{k}`")))?;
                (k, n.trim())
            }
            None => (1, term),
        };
        if name.is_empty() {
            return Err(ctx.err_at(side, "empty term in reaction"));
        }
        let idx = *names
            .get(name)
            .ok_or_else(|| ctx.err_at(name, format!("unknown species `{name}`")))?;
        counts[idx] += k;
    }
    Ok(counts)
}

/// Canonical text form; `parse_model(write_model(..))` reproduces the input.
pub fn write_model(model: &VasModel, prop: &PropertySpec) -> String {
    let mut out = String::new();
    let names: Vec<&str> = model.species.iter().map(|s| s.name.as_str()).collect();
    out.push_str(&format!("species: {}\n", names.join(" ")));
    let init: Vec<String> = model.initial.iter().map(ToString::to_string).collect();
    out.push_str(&format!("init: {}\n", init.join(" ")));
    out.push_str(&format!("time: {}\n", prop.time_bound));
    for f in &prop.substates {
        out.push_str(&format!("target: {} = {}", names[f.target], f.beta));
        for (&k, a) in &f.coeffs {
            out.push_str(&format!(" + {}*{}", a, names[k]));
        }
        out.push('\n');
    }
    let side = |counts: &[u32]| {
        let terms: Vec<String> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(j, &c)| {
                if c == 1 {
                    names[j].to_string()
                } else {
                    format!("{c}*{}", names[j])
                }
            })
            .collect();
        if terms.is_empty() {
            "0".to_string()
        } else {
            terms.join(" + ")
        }
    };
    for r in &model.reactions {
        out.push_str(&format!(
            "reaction: {} : {} -> {} @ {}\n",
            r.name,
            side(&r.reactants),
            side(&r.products),
            r.rate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SSPD: &str = "species: S1 S2\ninit: 1 40\ntime: 100\ntarget: S2 = 80\n\
                        reaction: r1 : S1 -> S1 + S2 @ 1.0\nreaction: r2 : S2 -> 0 @ 0.025\n";

    #[test]
    fn parses_sspd() {
        let (m, p) = parse_model(SSPD).unwrap();
        assert_eq!(m.m(), 2);
        assert_eq!(m.n(), 2);
        assert_eq!(m.reactions[0].update, vec![0, 1]);
        assert_eq!(m.reactions[1].update, vec![0, -1]);
        assert_eq!(p.time_bound, 100.0);
        assert_eq!(p.substates, vec![SubstateFormula::equality(1, 80)]);
    }

    #[test]
    fn unknown_species_is_reported_with_line() {
        let text = "species: A B\ninit: 1 1\ntime: 1\ntarget: A = 2\nreaction: r : X -> A @ 1\n";
        let err = parse_model(text).unwrap_err();
        assert_eq!(err.line, 5);
        assert!(err.message.contains("`X`"), "{err}");
        assert_eq!(err.column, 15);
    }

    #[test]
    fn validation_errors() {
        let bad_arity = "species: A B\ninit: 1\ntime: 1\ntarget: A = 2\nreaction: r : A -> B @ 1\n";
        assert!(parse_model(bad_arity)
            .unwrap_err()
            .message
            .contains("init has 1 values"));
        let negative = "species: A\ninit: -1\ntime: 1\ntarget: A = 2\nreaction: r : A -> 0 @ 1\n";
        assert!(parse_model(negative)
            .unwrap_err()
            .message
            .contains("negative"));
        let zero_rate = "species: A\ninit: 1\ntime: 1\ntarget: A = 2\nreaction: r : A -> 0 @ 0\n";
        assert!(parse_model(zero_rate)
            .unwrap_err()
            .message
            .contains("positive"));
        let empty_target = "species: A\ninit: 1\ntime: 1\ntarget: = 2\nreaction: r : A -> 0 @ 1\n";
        assert!(parse_model(empty_target)
            .unwrap_err()
            .message
            .contains("empty target"));
        let unknown_target =
            "species: A\ninit: 1\ntime: 1\ntarget: Q = 2\nreaction: r : A -> 0 @ 1\n";
        assert!(parse_model(unknown_target)
            .unwrap_err()
            .message
            .contains("`Q`"));
        let no_target = "species: A\ninit: 1\ntime: 1\nreaction: r : A -> 0 @ 1\n";
        assert!(parse_model(no_target)
            .unwrap_err()
            .message
            .contains("target"));
        let syntax = "species: A\ninit: 1\ntime: 1\ntarget: A = 2\nreaction: r : A 0 @ 1\n";
        assert!(parse_model(syntax).unwrap_err().message.contains("->"));
    }

    #[test]
    fn coupled_targets_and_stoichiometry() {
        let text = "species: A B C\ninit: 0 0 0\ntime: 1\n\
                    target: A = 2 + 1/2*B + C\n\
                    reaction: r : 2*A + B -> 3*C @ 0.5\n";
        let (m, p) = parse_model(text).unwrap();
        assert_eq!(m.reactions[0].reactants, vec![2, 1, 0]);
        assert_eq!(m.reactions[0].update, vec![-2, -1, 3]);
        let f = &p.substates[0];
        assert_eq!(f.beta, 2);
        assert_eq!(f.coeffs[&1], crate::linalg::rat_frac(1, 2));
        assert_eq!(f.coeffs[&2], rat(1));
        assert!(f.holds(&[5, 2, 2]));
        assert!(!f.holds(&[5, 2, 3]));
        // falling factorial: 0.5 · (3·2) · 4
        assert_eq!(m.propensity(0, &[3, 4, 0]), 12.0);
        assert_eq!(m.propensity(0, &[1, 4, 0]), 0.0);
    }

    #[test]
    fn sspd_propensities() {
        let (m, _) = parse_model(SSPD).unwrap();
        let s = State::new(vec![1, 40]);
        assert_eq!(m.propensity(0, &s), 1.0);
        let succ = m.enabled_successors(&s);
        assert_eq!(succ.len(), 2);
        assert_eq!(succ[1].rate, 1.0);
        assert_eq!(m.exit_rate(&s), 2.0);
        let empty = State::new(vec![1, 0]);
        let succ = m.enabled_successors(&empty);
        assert_eq!(succ.len(), 1);
        assert_eq!(succ[0].reaction, 0);
    }

    #[test]
    fn decimal_splitting() {
        assert_eq!(parse_decimal("4.00e-4"), Some((4, -4)));
        assert_eq!(parse_decimal("1050"), Some((105, 1)));
        assert_eq!(parse_decimal("1.05e3"), Some((105, 1)));
        assert_eq!(parse_decimal("3.21"), Some((321, -2)));
        assert_eq!(parse_decimal("7"), Some((7, 0)));
        assert_eq!(parse_decimal(".5"), Some((5, -1)));
        assert_eq!(parse_decimal("x"), None);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let (m, p) = parse_model(SSPD).unwrap();
        let text = write_model(&m, &p);
        let (m2, p2) = parse_model(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(p, p2);
        assert_eq!(write_model(&m2, &p2), text);
    }
}
