//! Random knowledge bases for property and acceptance tests.
#![allow(dead_code)]

use std::fmt::Write;

use fodot_core::interp::{PartialStructure, Term};
use fodot_core::Value;
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct GType {
    pub name: String,
    pub elems: Vec<String>,
    pub numeric: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Res {
    Bool,
    Ty(usize),
}

#[derive(Clone, Debug)]
pub struct GSym {
    pub name: String,
    pub args: Vec<usize>,
    pub res: Res,
    pub defined: bool,
}

#[derive(Clone, Debug)]
pub struct Limits {
    pub types: usize,
    pub elems: usize,
    pub symbols: usize,
    pub assertions: usize,
    /// Largest number of candidate interpretations of the free symbols.
    pub budget: u64,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            types: 3,
            elems: 4,
            symbols: 6,
            assertions: 8,
            budget: 1024,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RandomKb {
    pub types: Vec<GType>,
    pub syms: Vec<GSym>,
    pub axioms: Vec<String>,
    pub rules: Vec<String>,
    pub source: String,
}

impl RandomKb {
    fn range(&self, r: Res) -> Vec<String> {
        match r {
            Res::Bool => vec!["false".into(), "true".into()],
            Res::Ty(t) => self.types[t].elems.clone(),
        }
    }

    fn tuples(&self, args: &[usize]) -> Vec<Vec<String>> {
        let mut out = vec![Vec::new()];
        for &a in args {
            out = out
                .into_iter()
                .flat_map(|t| {
                    self.types[a].elems.iter().map(move |e| {
                        let mut t = t.clone();
                        t.push(e.clone());
                        t
                    })
                })
                .collect();
        }
        out
    }

    /// Ground terms of one symbol, as text.
    pub fn terms_of(&self, sym: &GSym) -> Vec<String> {
        self.tuples(&sym.args)
            .into_iter()
            .map(|t| format!("{}({})", sym.name, t.join(", ")))
            .collect()
    }

    /// Terms of symbols that are not defined, with their possible values.
    pub fn free_terms(&self) -> Vec<(String, Vec<String>)> {
        self.syms
            .iter()
            .filter(|s| !s.defined)
            .flat_map(|s| {
                let r = self.range(s.res);
                self.terms_of(s).into_iter().map(move |t| (t, r.clone()))
            })
            .collect()
    }

    /// Number of interpretations of the free symbols.
    pub fn candidates(&self) -> u64 {
        self.free_terms()
            .iter()
            .fold(1u64, |acc, (_, r)| acc.saturating_mul(r.len() as u64))
    }

    /// Numeric expressions worth optimizing.
    pub fn numeric_targets(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.syms {
            if let Res::Ty(t) = s.res {
                if self.types[t].numeric {
                    out.extend(self.terms_of(s));
                }
            }
            if s.res == Res::Bool && s.args.len() == 1 {
                out.push(format!("#{{x in {}: {}(x)}}", self.types[s.args[0]].name, s.name));
            }
        }
        out
    }

    /// Picks up to `n` free terms and random values for them.
    pub fn random_facts(&self, rng: &mut StdRng, n: usize) -> Vec<(String, String)> {
        let mut terms = self.free_terms();
        terms.shuffle(rng);
        terms
            .into_iter()
            .take(n)
            .map(|(t, r)| (t, r.choose(rng).unwrap().clone()))
            .collect()
    }
}

/// Adds `term = value` facts given as text.
pub fn with_facts(s: &PartialStructure, facts: &[(String, String)]) -> PartialStructure {
    let mut s = s.clone();
    for (t, v) in facts {
        let term = s.parse_term(t).unwrap();
        let value = s.parse_value(&term, v).unwrap();
        s = s.assert_fact(term, value).unwrap();
    }
    s
}

pub fn parse_fact(s: &PartialStructure, t: &str, v: &str) -> (Term, Value) {
    let term = s.parse_term(t).unwrap();
    let value = s.parse_value(&term, v).unwrap();
    (term, value)
}

const CMP: [&str; 6] = ["=", "~=", "<", "=<", ">", ">="];

struct Gen<'a> {
    rng: &'a mut StdRng,
    kb: &'a RandomKb,
    vars: usize,
    /// Generating an axiom, where defined symbols may occur anywhere.
    axiom: bool,
}

impl Gen<'_> {
    fn fresh(&mut self) -> String {
        self.vars += 1;
        format!("x{}", self.vars)
    }

    fn usable(&self, s: &GSym, defined_ok: bool) -> bool {
        !s.defined || defined_ok
    }

    /// An argument of type `ty`: a variable, an element or an application.
    fn arg(&mut self, ty: usize, env: &[(String, usize)], depth: usize, defs: bool) -> String {
        let vars: Vec<&String> = env.iter().filter(|(_, t)| *t == ty).map(|(v, _)| v).collect();
        if !vars.is_empty() && self.rng.gen_bool(0.6) {
            return vars.choose(self.rng).unwrap().to_string();
        }
        if depth > 0 && self.rng.gen_bool(0.2) {
            if let Some(app) = self.app(Res::Ty(ty), env, depth - 1, defs) {
                return app;
            }
        }
        self.kb.types[ty].elems.choose(self.rng).unwrap().clone()
    }

    /// An application of a symbol with result `res`.
    fn app(&mut self, res: Res, env: &[(String, usize)], depth: usize, defs: bool) -> Option<String> {
        let cands: Vec<&GSym> = self
            .kb
            .syms
            .iter()
            .filter(|s| s.res == res && self.usable(s, defs))
            .collect();
        let s = (*cands.choose(self.rng)?).clone();
        let args: Vec<String> = s.args.iter().map(|&a| self.arg(a, env, depth, defs)).collect();
        Some(format!("{}({})", s.name, args.join(", ")))
    }

    /// A numeric expression over numeric type `ty`.
    fn numeric(&mut self, ty: usize, env: &[(String, usize)], depth: usize, defs: bool) -> String {
        let base = match self.app(Res::Ty(ty), env, depth, defs) {
            Some(a) if self.rng.gen_bool(0.7) => a,
            _ => self.arg(ty, env, depth, defs),
        };
        match self.rng.gen_range(0..6) {
            0 => format!("{base} + {}", self.rng.gen_range(1..3)),
            1 => format!("{} * {base}", self.rng.gen_range(2..4)),
            2 => {
                let other = self.arg(ty, env, depth, defs);
                format!("{base} - {other}")
            }
            3 => {
                let sums: Vec<(usize, GSym)> = self
                    .kb
                    .syms
                    .iter()
                    .filter(|s| s.res == Res::Ty(ty) && s.args.len() == 1 && self.usable(s, defs))
                    .map(|s| (s.args[0], s.clone()))
                    .collect();
                match sums.choose(self.rng) {
                    Some((a, s)) => {
                        let op = ["sum", "min", "max"].choose(self.rng).unwrap();
                        format!("{op}(lambda y in {}: {}(y))", self.kb.types[*a].name, s.name)
                    }
                    None => base,
                }
            }
            _ => base,
        }
    }

    fn atom(&mut self, env: &[(String, usize)], depth: usize, defs: bool) -> String {
        for _ in 0..8 {
            match self.rng.gen_range(0..10) {
                0..=4 => {
                    if let Some(a) = self.app(Res::Bool, env, depth, defs) {
                        return a;
                    }
                }
                5..=8 => {
                    let tys: Vec<usize> = self
                        .kb
                        .syms
                        .iter()
                        .filter(|s| self.usable(s, defs))
                        .filter_map(|s| match s.res {
                            Res::Ty(t) => Some(t),
                            Res::Bool => None,
                        })
                        .collect();
                    let Some(&ty) = tys.choose(self.rng) else { continue };
                    let lhs = self.app(Res::Ty(ty), env, depth, defs).unwrap();
                    if self.kb.types[ty].numeric {
                        let op = CMP.choose(self.rng).unwrap();
                        let rhs = self.numeric(ty, env, depth, defs);
                        return format!("{lhs} {op} {rhs}");
                    }
                    let op = if self.rng.gen_bool(0.7) { "=" } else { "~=" };
                    let rhs = match self.app(Res::Ty(ty), env, depth, defs) {
                        Some(a) if self.rng.gen_bool(0.3) => a,
                        _ => self.arg(ty, env, depth, defs),
                    };
                    return format!("{lhs} {op} {rhs}");
                }
                _ => {
                    let preds: Vec<GSym> = self
                        .kb
                        .syms
                        .iter()
                        .filter(|s| s.res == Res::Bool && s.args.len() == 1 && self.usable(s, self.axiom))
                        .cloned()
                        .collect();
                    if let Some(p) = preds.choose(self.rng) {
                        let v = self.fresh();
                        let op = CMP.choose(self.rng).unwrap();
                        let k = self.rng.gen_range(0..=self.kb.types[p.args[0]].elems.len());
                        return format!("#{{{v} in {}: {}({v})}} {op} {k}", self.kb.types[p.args[0]].name, p.name);
                    }
                }
            }
        }
        "true".into()
    }

    /// A formula; with `defs` false, defined symbols do not occur and the
    /// result may be used under negation.
    fn formula(&mut self, env: &mut Vec<(String, usize)>, depth: usize, defs: bool, axiom: bool) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            return self.atom(env, 1, defs || axiom);
        }
        let d = depth - 1;
        let neg = axiom;
        match self.rng.gen_range(0..7) {
            0 => format!("~({})", self.formula(env, d, neg, axiom)),
            1 => format!("({} & {})", self.formula(env, d, defs, axiom), self.formula(env, d, defs, axiom)),
            2 => format!("({} | {})", self.formula(env, d, defs, axiom), self.formula(env, d, defs, axiom)),
            3 => format!("({} => {})", self.formula(env, d, neg, axiom), self.formula(env, d, defs, axiom)),
            4 => format!("({} <=> {})", self.formula(env, d, neg, axiom), self.formula(env, d, neg, axiom)),
            k => {
                let ty = self.rng.gen_range(0..self.kb.types.len());
                let v = self.fresh();
                env.push((v.clone(), ty));
                let body = self.formula(env, d, defs, axiom);
                env.pop();
                let q = if k == 5 { '!' } else { '?' };
                format!("({q}{v} in {}: {body})", self.kb.types[ty].name)
            }
        }
    }
}

/// A random knowledge base within `limits`. Definitions use defined symbols
/// only positively, so every KB is stratified.
pub fn random_kb(rng: &mut StdRng, limits: &Limits) -> RandomKb {
    loop {
        if let Some(kb) = attempt(rng, limits) {
            return kb;
        }
    }
}

fn attempt(rng: &mut StdRng, limits: &Limits) -> Option<RandomKb> {
    let letters = ["a", "b", "c", "d"];
    let ntypes = rng.gen_range(1..=limits.types);
    let types: Vec<GType> = (0..ntypes)
        .map(|i| {
            let k = rng.gen_range(2..=limits.elems.max(2));
            let numeric = rng.gen_bool(0.35);
            GType {
                name: format!("T{}", i + 1),
                elems: (0..k)
                    .map(|j| if numeric { j.to_string() } else { format!("{}{}", letters[i % 4], j + 1) })
                    .collect(),
                numeric,
            }
        })
        .collect();
    let nsyms = rng.gen_range(2..=limits.symbols);
    let mut syms = Vec::new();
    for i in 0..nsyms {
        let (name, args, res) = if rng.gen_bool(0.6) {
            let arity = *[0, 0, 1, 1, 2].choose(rng).unwrap();
            let a = rng.gen_range(0..ntypes);
            let args = (0..arity).map(|_| if rng.gen_bool(0.7) { a } else { rng.gen_range(0..ntypes) }).collect();
            (format!("p{}", i + 1), args, Res::Bool)
        } else {
            let arity = if rng.gen_bool(0.6) { 0 } else { 1 };
            let args = (0..arity).map(|_| rng.gen_range(0..ntypes)).collect();
            (format!("f{}", i + 1), args, Res::Ty(rng.gen_range(0..ntypes)))
        };
        syms.push(GSym {
            name,
            args,
            res,
            defined: false,
        });
    }
    let mut kb = RandomKb {
        types,
        syms,
        axioms: Vec::new(),
        rules: Vec::new(),
        source: String::new(),
    };

    // definitions: one or two predicates, or a nullary function
    if rng.gen_bool(0.5) {
        let preds: Vec<usize> = (0..kb.syms.len()).filter(|&i| kb.syms[i].res == Res::Bool).collect();
        let funcs: Vec<usize> = (0..kb.syms.len())
            .filter(|&i| kb.syms[i].res != Res::Bool && kb.syms[i].args.is_empty())
            .collect();
        if !funcs.is_empty() && rng.gen_bool(0.25) {
            let f = *funcs.choose(rng).unwrap();
            kb.syms[f].defined = true;
        } else if preds.len() >= 2 {
            let mut chosen = preds.clone();
            chosen.shuffle(rng);
            chosen.truncate(rng.gen_range(1..=2));
            for i in chosen {
                kb.syms[i].defined = true;
            }
        }
    }
    if kb.candidates() > limits.budget || kb.syms.iter().all(|s| s.defined) {
        return None;
    }

    let mut g = Gen {
        rng,
        kb: &kb,
        vars: 0,
        axiom: false,
    };
    let mut rules = Vec::new();
    for s in kb.syms.iter().filter(|s| s.defined) {
        let n = g.rng.gen_range(1..=2);
        for _ in 0..n {
            let mut env: Vec<(String, usize)> = Vec::new();
            let head_args: Vec<String> = s
                .args
                .iter()
                .map(|&a| {
                    let v = g.fresh();
                    env.push((v.clone(), a));
                    v
                })
                .collect();
            let binders: Vec<String> = env.iter().map(|(v, t)| format!("{v} in {}", kb.types[*t].name)).collect();
            let prefix = if binders.is_empty() { String::new() } else { format!("!{}: ", binders.join(", ")) };
            let head = format!("{}({})", s.name, head_args.join(", "));
            let recursive = s.res == Res::Bool;
            match s.res {
                Res::Bool => {
                    let body = g.formula(&mut env, 2, recursive, false);
                    rules.push(format!("{prefix}{head} <- {body}."));
                }
                Res::Ty(t) => {
                    let v = kb.types[t].elems.choose(g.rng).unwrap().clone();
                    let body = g.formula(&mut env, 2, false, false);
                    rules.push(format!("{prefix}{head} = {v} <- {body}."));
                }
            }
        }
        // transitive closure pattern: two recursive occurrences
        if s.res == Res::Bool && s.args.len() == 2 && s.args[0] == s.args[1] && g.rng.gen_bool(0.5) {
            let t = &kb.types[s.args[0]].name;
            let (x, y, z) = (g.fresh(), g.fresh(), g.fresh());
            rules.push(format!(
                "!{x} in {t}, {y} in {t}: {n}({x}, {y}) <- ?{z} in {t}: {n}({x}, {z}) & {n}({z}, {y}).",
                n = s.name
            ));
        }
    }
    if rules.len() > limits.assertions {
        return None;
    }
    let room = limits.assertions - rules.len();
    let naxioms = g.rng.gen_range(0..=room.min(5));
    g.axiom = true;
    let axioms: Vec<String> = (0..naxioms)
        .map(|_| format!("{}.", g.formula(&mut Vec::new(), 3, true, true)))
        .collect();
    kb.rules = rules;
    kb.axioms = axioms;
    kb.source = render(&kb);
    Some(kb)
}

fn render(kb: &RandomKb) -> String {
    let mut out = String::from("vocabulary V {\n");
    for t in &kb.types {
        if t.numeric {
            writeln!(out, "    type {} := {{0..{}}}", t.name, t.elems.len() - 1).unwrap();
        } else {
            writeln!(out, "    type {} := {{{}}}", t.name, t.elems.join(", ")).unwrap();
        }
    }
    for s in &kb.syms {
        let args = if s.args.is_empty() {
            "()".to_string()
        } else {
            s.args.iter().map(|&a| kb.types[a].name.as_str()).collect::<Vec<_>>().join(" * ")
        };
        let res = match s.res {
            Res::Bool => "Bool",
            Res::Ty(t) => kb.types[t].name.as_str(),
        };
        writeln!(out, "    {}: {args} -> {res}", s.name).unwrap();
    }
    out.push_str("}\ntheory T:V {\n");
    for a in &kb.axioms {
        writeln!(out, "    {a}").unwrap();
    }
    if !kb.rules.is_empty() {
        out.push_str("    {\n");
        for r in &kb.rules {
            writeln!(out, "        {r}").unwrap();
        }
        out.push_str("    }\n");
    }
    out.push_str("}\n");
    out
}
