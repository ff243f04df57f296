use std::fmt;

/// A binary predicate used as a role, possibly inverted. `P` relates a
/// constant to the objects of its `P`-facts; `P⁻` to their subjects.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Role {
    pub pred: String,
    pub inverse: bool,
}

impl Role {
    pub fn new(pred: impl Into<String>) -> Self {
        Role {
            pred: pred.into(),
            inverse: false,
        }
    }

    pub fn inverse(pred: impl Into<String>) -> Self {
        Role {
            pred: pred.into(),
            inverse: true,
        }
    }

    /// `P^-` in rule text.
    pub fn to_text(&self) -> String {
        if self.inverse {
            format!("{}^-", self.pred)
        } else {
            self.pred.clone()
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.inverse {
            write!(f, "{}⁻", self.pred)
        } else {
            f.write_str(&self.pred)
        }
    }
}

/// Concepts of ALCQ extended with the counting operator
/// `∃_n R.(C_1, …, C_n) ⊓ ≤_m R.⊤`.
///
/// Variant order doubles as the canonical conjunct order: `⊤` first, then
/// atoms, then quantified concepts.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Concept {
    Top,
    Atomic(String),
    Not(Box<Concept>),
    Exists(Role, Box<Concept>),
    AtLeast(u32, Role, Box<Concept>),
    AtMost(u32, Role, Box<Concept>),
    ForAll(Role, Box<Concept>),
    /// At least `fillers.len()` distinct `role`-neighbours, matched
    /// one-to-one with the fillers, and at most `max` neighbours in total.
    ExistsUnique {
        role: Role,
        fillers: Vec<Concept>,
        max: u32,
    },
    And(Vec<Concept>),
    Or(Vec<Concept>),
}

/// The syntactic fragments rule bodies are checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fragment {
    /// `⊤`, atoms, `⊓`, `⊔`, `∃R.C`, `≥_n R.C`.
    Eluq,
    /// `⊤`, atoms, `⊓`, `∃_n R.(C_1, …, C_n) ⊓ ≤_m R.⊤`.
    Omega,
}

impl Fragment {
    pub fn name(self) -> &'static str {
        match self {
            Fragment::Eluq => "ELUQ",
            Fragment::Omega => "Omega",
        }
    }
}

impl Concept {
    pub fn atom(name: impl Into<String>) -> Concept {
        Concept::Atomic(name.into())
    }

    pub fn exists(role: Role, filler: Concept) -> Concept {
        Concept::Exists(role, Box::new(filler))
    }

    pub fn at_least(n: u32, role: Role, filler: Concept) -> Concept {
        Concept::AtLeast(n, role, Box::new(filler))
    }

    /// Conjunction of `parts`; `⊤` when empty, the part itself when single.
    pub fn and(mut parts: Vec<Concept>) -> Concept {
        match parts.len() {
            0 => Concept::Top,
            1 => parts.pop().unwrap(),
            _ => Concept::And(parts),
        }
    }

    pub fn or(mut parts: Vec<Concept>) -> Concept {
        match parts.len() {
            1 => parts.pop().unwrap(),
            _ => Concept::Or(parts),
        }
    }

    /// Flattens nested conjunctions and disjunctions and sorts their
    /// operands, and the fillers of counting nodes, by the derived order.
    pub fn canonical(&self) -> Concept {
        match self {
            Concept::Top | Concept::Atomic(_) => self.clone(),
            Concept::Not(c) => Concept::Not(Box::new(c.canonical())),
            Concept::Exists(r, c) => Concept::Exists(r.clone(), Box::new(c.canonical())),
            Concept::AtLeast(n, r, c) => Concept::AtLeast(*n, r.clone(), Box::new(c.canonical())),
            Concept::AtMost(n, r, c) => Concept::AtMost(*n, r.clone(), Box::new(c.canonical())),
            Concept::ForAll(r, c) => Concept::ForAll(r.clone(), Box::new(c.canonical())),
            Concept::ExistsUnique { role, fillers, max } => {
                let mut fillers: Vec<_> = fillers.iter().map(Concept::canonical).collect();
                fillers.sort();
                Concept::ExistsUnique {
                    role: role.clone(),
                    fillers,
                    max: *max,
                }
            }
            Concept::And(parts) => {
                let mut flat = Vec::new();
                for p in parts {
                    match p.canonical() {
                        Concept::And(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                Concept::and(flat)
            }
            Concept::Or(parts) => {
                let mut flat = Vec::new();
                for p in parts {
                    match p.canonical() {
                        Concept::Or(inner) => flat.extend(inner),
                        other => flat.push(other),
                    }
                }
                flat.sort();
                Concept::or(flat)
            }
        }
    }

    /// Describes the first node outside `fragment`, if any.
    pub fn fragment_violation(&self, fragment: Fragment) -> Option<String> {
        let children: Vec<&Concept> = match (self, fragment) {
            (Concept::Top | Concept::Atomic(_), _) => vec![],
            (Concept::And(parts), _) if !parts.is_empty() => parts.iter().collect(),
            (Concept::Or(parts), Fragment::Eluq) if !parts.is_empty() => parts.iter().collect(),
            (Concept::Exists(_, c), Fragment::Eluq) => vec![c.as_ref()],
            (Concept::AtLeast(n, _, c), Fragment::Eluq) if *n >= 1 => vec![c.as_ref()],
            (Concept::ExistsUnique { fillers, max, .. }, Fragment::Omega)
                if !fillers.is_empty() && *max as usize >= fillers.len() =>
            {
                fillers.iter().collect()
            }
            _ => return Some(format!("`{self}` is not allowed")),
        };
        children.into_iter().find_map(|c| c.fragment_violation(fragment))
    }

    pub fn is_in(&self, fragment: Fragment) -> bool {
        self.fragment_violation(fragment).is_none()
    }

    /// Number of body concepts: atoms and quantified nodes each count one,
    /// `⊤` counts zero, and connectives count the sum of their operands.
    /// A counting node and its `≤_m` bound count as a single concept.
    pub fn size(&self) -> usize {
        match self {
            Concept::Top => 0,
            Concept::Atomic(_) => 1,
            Concept::And(parts) | Concept::Or(parts) => parts.iter().map(Concept::size).sum(),
            Concept::Not(c)
            | Concept::Exists(_, c)
            | Concept::AtLeast(_, _, c)
            | Concept::AtMost(_, _, c)
            | Concept::ForAll(_, c) => 1 + c.size(),
            Concept::ExistsUnique { fillers, .. } => 1 + fillers.iter().map(Concept::size).sum::<usize>(),
        }
    }

    /// Maximum nesting depth of quantifiers.
    pub fn depth(&self) -> usize {
        match self {
            Concept::Top | Concept::Atomic(_) => 0,
            Concept::Not(c) => c.depth(),
            Concept::And(parts) | Concept::Or(parts) => parts.iter().map(Concept::depth).max().unwrap_or(0),
            Concept::Exists(_, c)
            | Concept::AtLeast(_, _, c)
            | Concept::AtMost(_, _, c)
            | Concept::ForAll(_, c) => 1 + c.depth(),
            Concept::ExistsUnique { fillers, .. } => {
                1 + fillers.iter().map(Concept::depth).max().unwrap_or(0)
            }
        }
    }

    /// Every atomic concept name and role used.
    pub fn predicates(&self) -> (Vec<&str>, Vec<&Role>) {
        let mut atoms = Vec::new();
        let mut roles = Vec::new();
        self.collect_predicates(&mut atoms, &mut roles);
        (atoms, roles)
    }

    fn collect_predicates<'a>(&'a self, atoms: &mut Vec<&'a str>, roles: &mut Vec<&'a Role>) {
        match self {
            Concept::Top => {}
            Concept::Atomic(a) => atoms.push(a),
            Concept::Not(c) => c.collect_predicates(atoms, roles),
            Concept::And(parts) | Concept::Or(parts) => {
                parts.iter().for_each(|p| p.collect_predicates(atoms, roles))
            }
            Concept::Exists(r, c)
            | Concept::AtLeast(_, r, c)
            | Concept::AtMost(_, r, c)
            | Concept::ForAll(r, c) => {
                roles.push(r);
                c.collect_predicates(atoms, roles);
            }
            Concept::ExistsUnique { role, fillers, .. } => {
                roles.push(role);
                fillers.iter().for_each(|p| p.collect_predicates(atoms, roles));
            }
        }
    }

    fn write_filler(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Top | Concept::Atomic(_) => self.write_dl(f, true),
            _ => {
                f.write_str("(")?;
                self.write_dl(f, true)?;
                f.write_str(")")
            }
        }
    }

    /// Description-logic notation. Connectives nested inside a quantifier
    /// are written without surrounding spaces.
    fn write_dl(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        let and = if nested { "⊓" } else { " ⊓ " };
        let or = if nested { "⊔" } else { " ⊔ " };
        match self {
            Concept::Top => f.write_str("⊤"),
            Concept::Atomic(a) => f.write_str(a),
            Concept::Not(c) => {
                f.write_str("¬")?;
                c.write_filler(f)
            }
            Concept::And(parts) | Concept::Or(parts) => {
                let sep = if matches!(self, Concept::And(_)) { and } else { or };
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    let wrap = matches!((self, p), (Concept::And(_), Concept::Or(_)));
                    if wrap {
                        f.write_str("(")?;
                    }
                    p.write_dl(f, nested)?;
                    if wrap {
                        f.write_str(")")?;
                    }
                }
                Ok(())
            }
            Concept::Exists(r, c) => {
                write!(f, "∃{r}.")?;
                c.write_filler(f)
            }
            Concept::AtLeast(n, r, c) => {
                write!(f, "≥_{n} {r}.")?;
                c.write_filler(f)
            }
            Concept::AtMost(n, r, c) => {
                write!(f, "≤_{n} {r}.")?;
                c.write_filler(f)
            }
            Concept::ForAll(r, c) => {
                write!(f, "∀{r}.")?;
                c.write_filler(f)
            }
            Concept::ExistsUnique { role, fillers, max } => {
                write!(f, "∃_{} {role}.(", fillers.len())?;
                for (i, c) in fillers.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    c.write_dl(f, true)?;
                }
                write!(f, "){and}≤_{max} {role}.⊤")
            }
        }
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_dl(f, false)
    }
}
