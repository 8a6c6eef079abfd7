//! Equation catalog loaded from text files.
//!
//! Each file holds `key: value` header lines. A key with an empty value opens
//! a block made of the indented lines that follow it. The `expr` block is
//! joined into one expression, every other block is kept line by line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::expr::context::Context;
use crate::expr::{normalize, parse, parse_normal, Expr, NormalForm, Rat};
use crate::jet::{Direction, EvolutionEq, HyperbolicEq};

macro_rules! embedded {
    ($($name:literal),* $(,)?) => {
        &[$(($name, include_str!(concat!("../catalog/", $name, ".cat")))),*]
    };
}

const EMBEDDED: &[(&str, &str)] = embedded!(
    "hyp2", "hyp3", "hyp4", "ev7", "ev8", "ev9", "ev10", "ev11", "ev12", "ev13", "ev14", "ev15", "ev16",
    "ev17", "ev18", "ev19", "ev20", "ev21", "S1", "S2", "S3", "S4", "S5", "S6", "final1", "final2",
    "final3", "final4", "T1", "S3i", "S3ii", "S4S1", "S4S1point", "S5S3", "S6T",
);

const EMBEDDED_PAIRINGS: &str = include_str!("../catalog/pairings.cat");

/// Environment variable naming an extra catalog file or directory.
pub const CATALOG_ENV: &str = "HYPSYM_CATALOG";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Evolution,
    Hyperbolic,
    Transform,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Evolution => "evolution",
            Role::Hyperbolic => "hyperbolic",
            Role::Transform => "transform",
        })
    }
}

impl std::str::FromStr for Role {
    type Err = Error;
    fn from_str(s: &str) -> Result<Role> {
        match s {
            "evolution" => Ok(Role::Evolution),
            "hyperbolic" => Ok(Role::Hyperbolic),
            "transform" => Ok(Role::Transform),
            _ => Err(Error::Usage(format!("unknown role `{s}`"))),
        }
    }
}

/// A parameter name and its admissibility note.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamSpec {
    pub name: String,
    pub nonzero: bool,
}

impl fmt::Display for ParamSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nonzero {
            write!(f, "{} ({} != 0)", self.name, self.name)
        } else {
            f.write_str(&self.name)
        }
    }
}

#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub id: String,
    pub role: Role,
    pub params: Vec<ParamSpec>,
    pub provenance: String,
    /// Raw text of the expression (empty for transforms).
    pub expr_text: String,
    pub expr: Option<Expr>,
    pub fields: BTreeMap<String, String>,
    pub blocks: BTreeMap<String, Vec<String>>,
}

impl CatalogEntry {
    pub fn field(&self, key: &str) -> Option<&str> {
        self.fields.get(key).map(|s| s.as_str())
    }

    pub fn block(&self, key: &str) -> &[String] {
        self.blocks.get(key).map(|v| v.as_slice()).unwrap_or(&[])
    }

    pub fn param(&self, name: &str) -> Option<&ParamSpec> {
        self.params.iter().find(|p| p.name == name)
    }

    fn sort_key(&self) -> (u8, u32, String) {
        let p = self.provenance.split_whitespace().next().unwrap_or("");
        let num = |s: &str| s.parse::<u32>().unwrap_or(u32::MAX);
        let rank = match self.role {
            Role::Transform => 3,
            _ if p.starts_with('S') => 1,
            _ if p.starts_with("final.") => 2,
            _ => 0,
        };
        let n = match rank {
            1 => num(&p[1..]),
            2 => num(&p[6..]),
            _ => num(p),
        };
        (rank, n, self.id.clone())
    }
}

/// One line of the list output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntrySummary {
    pub id: String,
    pub role: Role,
    pub params: String,
    pub provenance: String,
}

impl fmt::Display for EntrySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:<10} {:<10} {:<12} [{}]", self.id, self.role, self.provenance, self.params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairingStatus {
    AssertedByPaper,
    ResolvedByTool,
    /// A pair requested directly rather than taken from the pairing table.
    AdHoc,
}

impl fmt::Display for PairingStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairingStatus::AssertedByPaper => "asserted-by-paper",
            PairingStatus::ResolvedByTool => "resolved-by-tool",
            PairingStatus::AdHoc => "ad-hoc",
        })
    }
}

impl std::str::FromStr for PairingStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asserted-by-paper" => Ok(PairingStatus::AssertedByPaper),
            "resolved-by-tool" => Ok(PairingStatus::ResolvedByTool),
            "ad-hoc" => Ok(PairingStatus::AdHoc),
            _ => Err(Error::Catalog(format!("unknown pairing status `{s}`"))),
        }
    }
}

/// A claimed pair. `evolution` is `None` until the tool resolves it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairingClaim {
    pub hyperbolic: String,
    pub evolution: Option<String>,
    pub direction: Direction,
    pub bindings: BTreeMap<String, Rat>,
    pub status: PairingStatus,
}

impl PairingClaim {
    pub fn id(&self) -> String {
        let ev = self.evolution.as_deref().unwrap_or("?");
        let mut s = format!("{}/{}/{}", self.hyperbolic, ev, self.direction);
        for (k, v) in &self.bindings {
            s.push_str(&format!("/{k}={v}"));
        }
        s
    }
}

impl fmt::Display for PairingClaim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.id(), self.status)
    }
}

/// An equation fetched from the catalog with its bindings applied.
#[derive(Clone, Debug)]
pub enum Equation {
    Hyperbolic(HyperbolicEq),
    Evolution(EvolutionEq),
}

impl Equation {
    pub fn nf(&self) -> &NormalForm {
        match self {
            Equation::Hyperbolic(h) => h.nf(),
            Equation::Evolution(e) => e.nf(),
        }
    }

    pub fn expr(&self) -> &Expr {
        match self {
            Equation::Hyperbolic(h) => &h.f,
            Equation::Evolution(e) => &e.g,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
    pairings: Vec<PairingClaim>,
}

impl Catalog {
    /// The shipped catalog.
    pub fn embedded() -> Result<Catalog> {
        let mut c = Catalog { entries: Vec::new(), pairings: Vec::new() };
        for (name, text) in EMBEDDED {
            c.insert(parse_entry(text).map_err(|e| Error::Catalog(format!("{name}: {e}")))?);
        }
        c.pairings = parse_pairings(EMBEDDED_PAIRINGS)?;
        c.sort();
        c.check_pairings()?;
        Ok(c)
    }

    /// The shipped catalog plus the path named by `HYPSYM_CATALOG`, if set.
    pub fn from_env() -> Result<Catalog> {
        let mut c = Catalog::embedded()?;
        if let Ok(p) = std::env::var(CATALOG_ENV) {
            if !p.is_empty() {
                c.load_path(Path::new(&p))?;
            }
        }
        Ok(c)
    }

    /// Adds entries from a `.cat` file or every `.cat` file in a directory.
    /// Entries with an existing id replace the earlier entry.
    pub fn load_path(&mut self, path: &Path) -> Result<()> {
        let files = if path.is_dir() {
            let mut v: Vec<_> = std::fs::read_dir(path)
                .map_err(|e| Error::Catalog(format!("{}: {e}", path.display())))?
                .filter_map(|d| d.ok().map(|d| d.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cat"))
                .collect();
            v.sort();
            v
        } else {
            vec![path.to_path_buf()]
        };
        for f in files {
            let text =
                std::fs::read_to_string(&f).map_err(|e| Error::Catalog(format!("{}: {e}", f.display())))?;
            if f.file_stem().is_some_and(|s| s == "pairings") {
                self.pairings.extend(parse_pairings(&text)?);
            } else {
                self.insert(parse_entry(&text).map_err(|e| Error::Catalog(format!("{}: {e}", f.display())))?);
            }
        }
        self.sort();
        self.check_pairings()
    }

    fn insert(&mut self, e: CatalogEntry) {
        self.entries.retain(|x| x.id != e.id);
        self.entries.push(e);
    }

    fn sort(&mut self) {
        self.entries.sort_by_cached_key(|e| e.sort_key());
        self.pairings.sort_by_key(|p| p.id());
        self.pairings.dedup();
    }

    fn check_pairings(&self) -> Result<()> {
        for p in &self.pairings {
            let h = self.entry(&p.hyperbolic)?;
            if h.role != Role::Hyperbolic {
                return Err(Error::Catalog(format!("pairing {}: `{}` is not hyperbolic", p.id(), h.id)));
            }
            if let Some(ev) = &p.evolution {
                let e = self.entry(ev)?;
                if e.role != Role::Evolution {
                    return Err(Error::Catalog(format!("pairing {}: `{ev}` is not an evolution entry", p.id())));
                }
                check_bindings(&merge_params(h, e), &p.bindings)?;
            } else {
                check_bindings(&h.params, &p.bindings)?;
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn pairings(&self) -> &[PairingClaim] {
        &self.pairings
    }

    pub fn entry(&self, id: &str) -> Result<&CatalogEntry> {
        self.entries.iter().find(|e| e.id == id).ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn list(&self, filter: Option<Role>) -> Vec<EntrySummary> {
        self.entries
            .iter()
            .filter(|e| filter.is_none_or(|r| r == e.role))
            .map(|e| EntrySummary {
                id: e.id.clone(),
                role: e.role,
                params: e.params.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "),
                provenance: e.provenance.clone(),
            })
            .collect()
    }

    /// Fetches an equation with parameters bound. Unbound parameters stay
    /// symbolic; bindings for parameters the entry does not declare are
    /// ignored so that one binding map can serve both sides of a pair.
    pub fn get(&self, id: &str, bindings: &BTreeMap<String, Rat>) -> Result<Equation> {
        let e = self.entry(id)?;
        let own: BTreeMap<String, Rat> =
            bindings.iter().filter(|(k, _)| e.param(k).is_some()).map(|(k, v)| (k.clone(), v.clone())).collect();
        check_bindings(&e.params, &own)?;
        let expr = e.expr.clone().ok_or_else(|| Error::Usage(format!("`{id}` is a transform, not an equation")))?;
        let expr = apply_bindings(&expr, &own)?;
        match e.role {
            Role::Hyperbolic => Ok(Equation::Hyperbolic(HyperbolicEq::with_bindings(id, expr, own)?)),
            Role::Evolution => Ok(Equation::Evolution(EvolutionEq::with_bindings(id, expr, Direction::X, own)?)),
            Role::Transform => unreachable!(),
        }
    }

    pub fn hyperbolic(&self, id: &str, bindings: &BTreeMap<String, Rat>) -> Result<HyperbolicEq> {
        match self.get(id, bindings)? {
            Equation::Hyperbolic(h) => Ok(h),
            _ => Err(Error::Usage(format!("`{id}` is not a hyperbolic equation"))),
        }
    }

    pub fn evolution(&self, id: &str, bindings: &BTreeMap<String, Rat>) -> Result<EvolutionEq> {
        match self.get(id, bindings)? {
            Equation::Evolution(e) => Ok(e),
            _ => Err(Error::Usage(format!("`{id}` is not an evolution equation"))),
        }
    }
}

fn merge_params(a: &CatalogEntry, b: &CatalogEntry) -> Vec<ParamSpec> {
    let mut v = a.params.clone();
    for p in &b.params {
        match v.iter_mut().find(|q| q.name == p.name) {
            Some(q) => q.nonzero |= p.nonzero,
            None => v.push(p.clone()),
        }
    }
    v
}

/// Rejects bindings for undeclared names and zero values for `!= 0` params.
pub fn check_bindings(params: &[ParamSpec], bindings: &BTreeMap<String, Rat>) -> Result<()> {
    for (k, v) in bindings {
        let p = params
            .iter()
            .find(|p| &p.name == k)
            .ok_or_else(|| Error::Usage(format!("parameter `{k}` is not declared here")))?;
        if p.nonzero && v.is_zero() {
            return Err(Error::Admissibility(format!("{k} != 0")));
        }
    }
    Ok(())
}

/// Substitutes parameter values. Goes through the normal form so that
/// symbols whose relation mentions a bound parameter are remapped.
pub fn apply_bindings(e: &Expr, bindings: &BTreeMap<String, Rat>) -> Result<Expr> {
    if bindings.is_empty() {
        return Ok(e.clone());
    }
    let map = binding_map(bindings)?;
    Ok(normalize(e)?.substitute(&map)?.to_expr())
}

pub fn binding_map(bindings: &BTreeMap<String, Rat>) -> Result<Vec<(usize, NormalForm)>> {
    let ctx = Context::standard();
    bindings
        .iter()
        .map(|(k, v)| match ctx.lookup(k) {
            Some(id) if ctx.is_param(id) => Ok((id, NormalForm::constant(v.clone()))),
            _ => Err(Error::Usage(format!("`{k}` is not a parameter"))),
        })
        .collect()
}

/// Parses `k=v` or `k = v` with an exact rational value.
pub fn parse_binding(s: &str) -> Result<(String, Rat)> {
    let (k, v) = s.split_once('=').ok_or_else(|| Error::Usage(format!("expected name=value, got `{s}`")))?;
    let k = k.trim().to_string();
    let value = parse_normal(v.trim())
        .map_err(|e| Error::Usage(format!("bad value for `{k}`: {e}")))?
        .constant_value()
        .ok_or_else(|| Error::Usage(format!("value for `{k}` must be a rational constant")))?;
    Ok((k, value))
}

/// Parses a comma separated binding list; `-` and the empty string give none.
pub fn parse_bindings(s: &str) -> Result<BTreeMap<String, Rat>> {
    let s = s.trim();
    if s.is_empty() || s == "-" {
        return Ok(BTreeMap::new());
    }
    s.split(',').map(parse_binding).collect()
}

fn parse_params(s: &str) -> Result<Vec<ParamSpec>> {
    let ctx = Context::standard();
    let mut out = Vec::new();
    for item in s.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, note) = match item.split_once('(') {
            Some((n, rest)) => (n.trim(), Some(rest.trim_end_matches(')').trim())),
            None => (item, None),
        };
        if !ctx.lookup(name).is_some_and(|id| ctx.is_param(id)) {
            return Err(Error::Catalog(format!("`{name}` is not a registered parameter")));
        }
        let nonzero = match note {
            None => false,
            Some(n) if n.replace(' ', "") == format!("{name}!=0") => true,
            Some(n) => return Err(Error::Catalog(format!("unsupported admissibility note `{n}`"))),
        };
        out.push(ParamSpec { name: name.to_string(), nonzero });
    }
    Ok(out)
}

/// Parses one entry file.
pub fn parse_entry(text: &str) -> Result<CatalogEntry> {
    let mut fields = BTreeMap::new();
    let mut blocks: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut open: Option<String> = None;
    for line in text.lines() {
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            let key = open.as_ref().ok_or_else(|| Error::Catalog(format!("indented line outside a block: `{line}`")))?;
            blocks.entry(key.clone()).or_default().push(line.trim().to_string());
            continue;
        }
        let (k, v) = line.split_once(':').ok_or_else(|| Error::Catalog(format!("expected `key: value`, got `{line}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if v.is_empty() {
            blocks.insert(k.clone(), Vec::new());
            open = Some(k);
        } else {
            fields.insert(k, v);
            open = None;
        }
    }
    let need = |k: &str| fields.get(k).cloned().ok_or_else(|| Error::Catalog(format!("missing `{k}:`")));
    let id = need("id")?;
    let role: Role = need("role")?.parse().map_err(|_| Error::Catalog(format!("{id}: bad role")))?;
    let params = match (fields.get("params"), blocks.contains_key("params")) {
        (Some(p), _) => parse_params(p)?,
        (None, true) => Vec::new(),
        (None, false) => return Err(Error::Catalog(format!("{id}: missing `params:`"))),
    };
    let provenance = need("provenance")?;
    let expr_text = match (fields.get("expr"), blocks.get("expr")) {
        (Some(s), _) => s.clone(),
        (None, Some(lines)) => lines.join(" "),
        (None, None) => String::new(),
    };
    let expr = if role == Role::Transform {
        None
    } else {
        if expr_text.is_empty() {
            return Err(Error::Catalog(format!("{id}: missing `expr:`")));
        }
        Some(parse(&expr_text)?)
    };
    let entry = CatalogEntry { id, role, params, provenance, expr_text, expr, fields, blocks };
    if let Some(e) = &entry.expr {
        match role {
            Role::Hyperbolic => drop(HyperbolicEq::new(&entry.id, e.clone())?),
            Role::Evolution => drop(EvolutionEq::new(&entry.id, e.clone(), Direction::X)?),
            Role::Transform => {}
        }
    }
    Ok(entry)
}

/// Parses the whitespace separated pairings table.
pub fn parse_pairings(text: &str) -> Result<Vec<PairingClaim>> {
    let mut out = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 5 {
            return Err(Error::Catalog(format!("pairing line needs 5 columns: `{line}`")));
        }
        let status = match cols[4] {
            "asserted-by-paper" => PairingStatus::AssertedByPaper,
            "resolved-by-tool" => PairingStatus::ResolvedByTool,
            s => return Err(Error::Catalog(format!("unknown pairing status `{s}`"))),
        };
        let evolution = (cols[1] != "?").then(|| cols[1].to_string());
        if evolution.is_none() && status != PairingStatus::ResolvedByTool {
            return Err(Error::Catalog(format!("unresolved pairing must be resolved-by-tool: `{line}`")));
        }
        out.push(PairingClaim {
            hyperbolic: cols[0].to_string(),
            evolution,
            direction: cols[2].parse()?,
            bindings: parse_bindings(cols[3])?,
            status,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat() -> Catalog {
        Catalog::embedded().unwrap()
    }

    #[test]
    fn listing_counts_and_order() {
        let c = cat();
        let ev: Vec<String> = c.list(Some(Role::Evolution)).into_iter().map(|s| s.id).collect();
        let want: Vec<String> = (7..=21).map(|k| format!("ev{k}")).collect();
        assert_eq!(ev, want);
        let hyp: Vec<String> = c.list(Some(Role::Hyperbolic)).into_iter().map(|s| s.id).collect();
        assert_eq!(
            hyp,
            ["hyp2", "hyp3", "hyp4", "S1", "S2", "S3", "S4", "S5", "S6", "final1", "final2", "final3", "final4"]
        );
        assert_eq!(c.list(None).len(), c.entries().len());
    }

    #[test]
    fn get_matches_transcriptions() {
        let c = cat();
        let none = BTreeMap::new();
        let ev12 = c.get("ev12", &none).unwrap();
        assert_eq!(*ev12.nf(), parse_normal("5*(u2 - u1^2)*u3 - 5*u1*u2^2 + u1^5").unwrap());
        let hyp4 = c.get("hyp4", &none).unwrap();
        assert_eq!(*hyp4.nf(), parse_normal("exp(u) + exp(-2*u)").unwrap());
    }

    #[test]
    fn admissibility_is_enforced() {
        let c = cat();
        let b = parse_bindings("a=0").unwrap();
        assert!(matches!(c.get("S1", &b), Err(Error::Admissibility(_))));
        assert!(matches!(c.get("ev14", &parse_bindings("lambda2=0").unwrap()), Err(Error::Admissibility(_))));
        assert!(matches!(c.get("ev21", &parse_bindings("c=0").unwrap()), Err(Error::Admissibility(_))));
        assert!(c.get("ev14", &parse_bindings("lambda1=0").unwrap()).is_ok());
        assert!(matches!(c.get("nope", &BTreeMap::new()), Err(Error::UnknownId(_))));
    }

    #[test]
    fn bindings_remap_symbols() {
        let c = cat();
        let s3 = c.get("S3", &parse_bindings("a=1, b=0").unwrap()).unwrap();
        assert_eq!(*s3.nf(), parse_normal("2*f(uy)*sqrt(u1)").unwrap());
    }

    #[test]
    fn pairings_load() {
        let c = cat();
        assert_eq!(c.pairings().len(), 8);
        assert!(c.pairings().iter().any(|p| p.hyperbolic == "S2" && p.evolution.is_none()));
    }

    #[test]
    fn malformed_files_are_rejected() {
        assert!(parse_entry("id: x\nrole: hyperbolic\nparams:\nprovenance: 1\nexpr: u4").is_err());
        assert!(parse_entry("id: x\nrole: evolution\nparams:\nprovenance: 1\nexpr: uy").is_err());
        assert!(parse_entry("id: x\nrole: evolution\nprovenance: 1\nexpr: u1").is_err());
        assert!(parse_entry("id: x\nrole: evolution\nparams: zz\nprovenance: 1\nexpr: u1").is_err());
    }
}
