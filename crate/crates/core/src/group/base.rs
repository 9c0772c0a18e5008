use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::GroupError;

/// An element of the base group G₀.
///
/// For finite tables this is the dense index of the element in the declared
/// `elements` list; for the integers it is the integer itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Elem(pub i64);

impl Elem {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Elem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A finite group given by its full multiplication table.
#[derive(Debug, Clone)]
pub struct FiniteGroup {
    names: Vec<String>,
    index: HashMap<String, Elem>,
    table: Vec<u32>,
    inverse: Vec<u32>,
    identity: Elem,
}

impl FiniteGroup {
    /// Builds a group from element names, the identity name and a row-major
    /// table where `table[i][j]` names the product `elements[i] * elements[j]`.
    ///
    /// Checks closure, the identity and inverse laws and associativity on all
    /// triples.
    pub fn from_table(
        elements: &[String],
        identity: &str,
        table: &[Vec<String>],
    ) -> Result<Self, GroupError> {
        let n = elements.len();
        if n == 0 {
            return Err(GroupError::NotAGroupTable("empty element list".into()));
        }
        let mut index = HashMap::with_capacity(n);
        for (i, name) in elements.iter().enumerate() {
            if name == "t" || name == "t^-1" {
                return Err(GroupError::NotAGroupTable(format!(
                    "element name `{name}` clashes with the stable letter"
                )));
            }
            if index.insert(name.clone(), Elem(i as i64)).is_some() {
                return Err(GroupError::NotAGroupTable(format!("duplicate element `{name}`")));
            }
        }
        let identity = *index
            .get(identity)
            .ok_or_else(|| GroupError::NotAGroupTable(format!("unknown identity `{identity}`")))?;
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(GroupError::NotAGroupTable(format!("table must be {n}x{n}")));
        }
        let mut flat = Vec::with_capacity(n * n);
        for row in table {
            for cell in row {
                let e = index
                    .get(cell)
                    .ok_or_else(|| GroupError::NotAGroupTable(format!("unknown element `{cell}` in table")))?;
                flat.push(e.0 as u32);
            }
        }
        let mul = |a: usize, b: usize| flat[a * n + b] as usize;
        let e = identity.index();
        for g in 0..n {
            if mul(e, g) != g || mul(g, e) != g {
                return Err(GroupError::NotAGroupTable(format!(
                    "`{identity_name}` is not a two-sided identity for `{g_name}`",
                    identity_name = elements[e],
                    g_name = elements[g]
                )));
            }
        }
        let mut inverse = vec![u32::MAX; n];
        for g in 0..n {
            match (0..n).find(|&h| mul(g, h) == e) {
                Some(h) if mul(h, g) == e => inverse[g] = h as u32,
                _ => {
                    return Err(GroupError::NotAGroupTable(format!(
                        "`{}` has no two-sided inverse",
                        elements[g]
                    )))
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = mul(a, b);
                for c in 0..n {
                    if mul(ab, c) != mul(a, mul(b, c)) {
                        return Err(GroupError::NotAGroupTable(format!(
                            "associativity fails on ({}, {}, {})",
                            elements[a], elements[b], elements[c]
                        )));
                    }
                }
            }
        }
        Ok(Self {
            names: elements.to_vec(),
            index,
            table: flat,
            inverse,
            identity,
        })
    }

    pub fn order(&self) -> usize {
        self.names.len()
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        Elem(self.table[a.index() * self.names.len() + b.index()] as i64)
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        Elem(self.inverse[a.index()] as i64)
    }

    pub fn identity(&self) -> Elem {
        self.identity
    }

    pub fn name(&self, a: Elem) -> &str {
        &self.names[a.index()]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn lookup(&self, name: &str) -> Option<Elem> {
        self.index.get(name).copied()
    }
}

/// The base group G₀: either a finite multiplication table or the integers
/// under addition.
#[derive(Debug, Clone)]
pub enum BaseGroup {
    Finite(FiniteGroup),
    Integers,
}

impl BaseGroup {
    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        match self {
            BaseGroup::Finite(g) => g.mul(a, b),
            BaseGroup::Integers => Elem(a.0 + b.0),
        }
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        match self {
            BaseGroup::Finite(g) => g.inv(a),
            BaseGroup::Integers => Elem(-a.0),
        }
    }

    #[inline]
    pub fn identity(&self) -> Elem {
        match self {
            BaseGroup::Finite(g) => g.identity(),
            BaseGroup::Integers => Elem(0),
        }
    }

    /// Group order, `None` for the integers.
    pub fn order(&self) -> Option<usize> {
        match self {
            BaseGroup::Finite(g) => Some(g.order()),
            BaseGroup::Integers => None,
        }
    }

    /// All elements in declaration order (finite groups only).
    pub fn elements(&self) -> Option<impl Iterator<Item = Elem>> {
        self.order().map(|n| (0..n as i64).map(Elem))
    }

    pub fn name(&self, a: Elem) -> String {
        match self {
            BaseGroup::Finite(g) => g.name(a).to_string(),
            BaseGroup::Integers => a.0.to_string(),
        }
    }

    pub fn lookup(&self, name: &str) -> Option<Elem> {
        match self {
            BaseGroup::Finite(g) => g.lookup(name),
            BaseGroup::Integers => name.trim().parse::<i64>().ok().map(Elem),
        }
    }

    pub fn contains(&self, a: Elem) -> bool {
        match self {
            BaseGroup::Finite(g) => a.0 >= 0 && (a.0 as usize) < g.order(),
            BaseGroup::Integers => true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: &[&str]) -> Vec<String> {
        v.iter().map(|x| x.to_string()).collect()
    }

    #[test]
    fn rejects_non_associative_table() {
        // A Latin square with identity that is not associative (order 5 loop).
        let names = s(&["e", "a", "b", "c", "d"]);
        let rows = [
            ["e", "a", "b", "c", "d"],
            ["a", "e", "c", "d", "b"],
            ["b", "d", "e", "a", "c"],
            ["c", "b", "d", "e", "a"],
            ["d", "c", "a", "b", "e"],
        ];
        let table: Vec<Vec<String>> = rows.iter().map(|r| s(r)).collect();
        let err = FiniteGroup::from_table(&names, "e", &table).unwrap_err();
        assert!(matches!(err, GroupError::NotAGroupTable(_)), "{err}");
    }

    #[test]
    fn rejects_stable_letter_names() {
        let names = s(&["e", "t"]);
        let table = vec![s(&["e", "t"]), s(&["t", "e"])];
        assert!(FiniteGroup::from_table(&names, "e", &table).is_err());
    }

    #[test]
    fn integers_parse_and_multiply() {
        let z = BaseGroup::Integers;
        let a = z.lookup("-3").unwrap();
        let b = z.lookup("5").unwrap();
        assert_eq!(z.mul(a, b), Elem(2));
        assert_eq!(z.inv(a), Elem(3));
        assert_eq!(z.name(Elem(-7)), "-7");
    }
}
