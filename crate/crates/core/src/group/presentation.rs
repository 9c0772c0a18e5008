use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use super::base::{BaseGroup, Elem, FiniteGroup};
use super::normal_form::{Letter, NormalForm, PushEffect, Sign, Syllable};
use super::GroupError;

/// Base-group part of the JSON configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseGroupSpec {
    FiniteTable {
        elements: Vec<String>,
        identity: String,
        table: Vec<Vec<String>>,
    },
    Integers,
}

/// Raw (unvalidated) description of an HNN extension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub base_group: BaseGroupSpec,
    #[serde(rename = "subgroup_A")]
    pub subgroup_a: Vec<String>,
    #[serde(rename = "subgroup_B")]
    pub subgroup_b: Vec<String>,
    pub phi: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
enum Cosets {
    /// Lookup tables indexed by element id.
    Finite {
        decomp_a: Vec<(Elem, Elem)>,
        decomp_b: Vec<(Elem, Elem)>,
        phi: Vec<Elem>,
        phi_inv: Vec<Elem>,
        in_a: Vec<bool>,
        in_b: Vec<bool>,
        word_metric: Vec<Option<u32>>,
    },
    /// Integers with A = B = {0}: every element is its own coset representative.
    Trivial,
}

/// A validated HNN extension G = G₀ *_φ with fixed coset representatives.
#[derive(Debug, Clone)]
pub struct HnnPresentation {
    base: BaseGroup,
    a: Vec<Elem>,
    b: Vec<Elem>,
    generators: Vec<Elem>,
    x_reps: Vec<Elem>,
    y_reps: Vec<Elem>,
    cosets: Cosets,
}

fn lookup_all(base: &BaseGroup, names: &[String], what: &str) -> Result<Vec<Elem>, GroupError> {
    names
        .iter()
        .map(|n| {
            base.lookup(n)
                .ok_or_else(|| GroupError::NotASubgroup(format!("unknown element `{n}` in {what}")))
        })
        .collect()
}

/// Validates a group specification and fixes coset representatives.
///
/// `generators` is the support of μ₀ by element name. Coset representatives
/// are the first elements of each coset met by a breadth-first search from e₀
/// that right-multiplies by the generators in declared element order; elements
/// the search does not reach are appended in declaration order. An empty generator
/// list means "all elements".
pub fn validate_presentation(spec: &GroupSpec, generators: &[String]) -> Result<HnnPresentation, GroupError> {
    let base = match &spec.base_group {
        BaseGroupSpec::FiniteTable {
            elements,
            identity,
            table,
        } => BaseGroup::Finite(FiniteGroup::from_table(elements, identity, table)?),
        BaseGroupSpec::Integers => BaseGroup::Integers,
    };
    let gens = generators
        .iter()
        .map(|n| base.lookup(n).ok_or_else(|| GroupError::UnknownLetter(n.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    let a = lookup_all(&base, &spec.subgroup_a, "subgroup_A")?;
    let b = lookup_all(&base, &spec.subgroup_b, "subgroup_B")?;
    let mut phi_pairs = Vec::with_capacity(spec.phi.len());
    for (k, v) in &spec.phi {
        let from = base
            .lookup(k)
            .ok_or_else(|| GroupError::NotAnIsomorphism(format!("unknown element `{k}` in phi")))?;
        let to = base
            .lookup(v)
            .ok_or_else(|| GroupError::NotAnIsomorphism(format!("unknown element `{v}` in phi")))?;
        phi_pairs.push((from, to));
    }
    match base {
        BaseGroup::Integers => build_integers(a, b, phi_pairs, gens),
        BaseGroup::Finite(ref g) => {
            let g = g.clone();
            build_finite(g, a, b, phi_pairs, gens)
        }
    }
}

fn build_integers(
    a: Vec<Elem>,
    b: Vec<Elem>,
    phi: Vec<(Elem, Elem)>,
    mut gens: Vec<Elem>,
) -> Result<HnnPresentation, GroupError> {
    let zero = Elem(0);
    if a.iter().chain(b.iter()).any(|&x| x != zero)
        || phi.iter().any(|&(x, y)| x != zero || y != zero)
    {
        return Err(GroupError::TrivialityViolation);
    }
    if !a.contains(&zero) {
        return Err(GroupError::NotASubgroup("subgroup_A must contain the identity".into()));
    }
    if !b.contains(&zero) {
        return Err(GroupError::NotASubgroup("subgroup_B must contain the identity".into()));
    }
    if !phi.contains(&(zero, zero)) {
        return Err(GroupError::NotAnIsomorphism("phi must map 0 to 0".into()));
    }
    gens.sort();
    gens.dedup();
    Ok(HnnPresentation {
        base: BaseGroup::Integers,
        a: vec![zero],
        b: vec![zero],
        generators: gens,
        x_reps: Vec::new(),
        y_reps: Vec::new(),
        cosets: Cosets::Trivial,
    })
}

fn check_subgroup(g: &FiniteGroup, set: &[Elem], name: &str) -> Result<Vec<bool>, GroupError> {
    let mut member = vec![false; g.order()];
    for &x in set {
        if member[x.index()] {
            return Err(GroupError::NotASubgroup(format!("{name} lists `{}` twice", g.name(x))));
        }
        member[x.index()] = true;
    }
    if !member[g.identity().index()] {
        return Err(GroupError::NotASubgroup(format!("{name} does not contain the identity")));
    }
    for &x in set {
        if !member[g.inv(x).index()] {
            return Err(GroupError::NotASubgroup(format!(
                "{name} is not closed under inverses at `{}`",
                g.name(x)
            )));
        }
        for &y in set {
            if !member[g.mul(x, y).index()] {
                return Err(GroupError::NotASubgroup(format!(
                    "{name} is not closed under multiplication at ({}, {})",
                    g.name(x),
                    g.name(y)
                )));
            }
        }
    }
    Ok(member)
}

/// Breadth-first order of G₀ from the identity over right multiplication by
/// `gens`, followed by any unreached elements in declaration order.
fn bfs_order(g: &FiniteGroup, gens: &[Elem]) -> (Vec<Elem>, Vec<Option<u32>>) {
    let n = g.order();
    let mut dist = vec![None; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    dist[g.identity().index()] = Some(0);
    queue.push_back(g.identity());
    while let Some(x) = queue.pop_front() {
        order.push(x);
        let d = dist[x.index()].unwrap();
        for &s in gens {
            let y = g.mul(x, s);
            if dist[y.index()].is_none() {
                dist[y.index()] = Some(d + 1);
                queue.push_back(y);
            }
        }
    }
    for i in 0..n {
        if dist[i].is_none() && !order.contains(&Elem(i as i64)) {
            order.push(Elem(i as i64));
        }
    }
    (order, dist)
}

/// Left-coset decomposition u = rep * h with the representative chosen as the
/// first coset member in `order`.
fn decompose(g: &FiniteGroup, sub: &[Elem], order: &[Elem]) -> (Vec<(Elem, Elem)>, Vec<Elem>) {
    let n = g.order();
    let mut decomp = vec![(Elem(-1), Elem(-1)); n];
    let mut reps = Vec::new();
    for &x in order {
        if decomp[x.index()].0 .0 >= 0 {
            continue;
        }
        reps.push(x);
        for &h in sub {
            let u = g.mul(x, h);
            decomp[u.index()] = (x, h);
        }
    }
    (decomp, reps)
}

fn build_finite(
    g: FiniteGroup,
    a: Vec<Elem>,
    b: Vec<Elem>,
    phi_pairs: Vec<(Elem, Elem)>,
    mut gens: Vec<Elem>,
) -> Result<HnnPresentation, GroupError> {
    let in_a = check_subgroup(&g, &a, "subgroup_A")?;
    let in_b = check_subgroup(&g, &b, "subgroup_B")?;
    if a.len() != b.len() {
        return Err(GroupError::NotAnIsomorphism(format!(
            "|A| = {} differs from |B| = {}",
            a.len(),
            b.len()
        )));
    }
    let n = g.order();
    let mut phi = vec![Elem(-1); n];
    let mut phi_inv = vec![Elem(-1); n];
    for &(x, y) in &phi_pairs {
        if !in_a[x.index()] {
            return Err(GroupError::NotAnIsomorphism(format!("phi is defined on `{}` outside A", g.name(x))));
        }
        if !in_b[y.index()] {
            return Err(GroupError::NotAnIsomorphism(format!(
                "phi maps `{}` to `{}` outside B",
                g.name(x),
                g.name(y)
            )));
        }
        if phi_inv[y.index()].0 >= 0 {
            return Err(GroupError::NotAnIsomorphism(format!("phi is not injective at `{}`", g.name(y))));
        }
        phi[x.index()] = y;
        phi_inv[y.index()] = x;
    }
    if let Some(&x) = a.iter().find(|x| phi[x.index()].0 < 0) {
        return Err(GroupError::NotAnIsomorphism(format!("phi is undefined at `{}`", g.name(x))));
    }
    for &x in &a {
        for &y in &a {
            if phi[g.mul(x, y).index()] != g.mul(phi[x.index()], phi[y.index()]) {
                return Err(GroupError::NotAnIsomorphism(format!(
                    "phi({0}*{1}) != phi({0})*phi({1})",
                    g.name(x),
                    g.name(y)
                )));
            }
        }
    }
    gens.sort();
    gens.dedup();
    let bfs_gens: Vec<Elem> = if gens.is_empty() {
        (0..n as i64).map(Elem).collect()
    } else {
        gens.clone()
    };
    let (order, dist) = bfs_order(&g, &bfs_gens);
    let (decomp_a, x_reps) = decompose(&g, &a, &order);
    let (decomp_b, y_reps) = decompose(&g, &b, &order);
    let mut a_sorted = a;
    a_sorted.sort();
    let mut b_sorted = b;
    b_sorted.sort();
    Ok(HnnPresentation {
        base: BaseGroup::Finite(g),
        a: a_sorted,
        b: b_sorted,
        generators: gens,
        x_reps,
        y_reps,
        cosets: Cosets::Finite {
            decomp_a,
            decomp_b,
            phi,
            phi_inv,
            in_a,
            in_b,
            word_metric: dist,
        },
    })
}

impl HnnPresentation {
    pub fn base(&self) -> &BaseGroup {
        &self.base
    }

    #[inline]
    pub fn identity(&self) -> Elem {
        self.base.identity()
    }

    pub fn subgroup_a(&self) -> &[Elem] {
        &self.a
    }

    pub fn subgroup_b(&self) -> &[Elem] {
        &self.b
    }

    /// Support of μ₀ this presentation was built with (sorted by element id).
    pub fn generators(&self) -> &[Elem] {
        &self.generators
    }

    /// Coset representatives X of G₀/A. Empty for the integers, where X = ℤ.
    pub fn x_reps(&self) -> &[Elem] {
        &self.x_reps
    }

    /// Coset representatives Y of G₀/B. Empty for the integers, where Y = ℤ.
    pub fn y_reps(&self) -> &[Elem] {
        &self.y_reps
    }

    /// True when A = B = G₀ (only possible for finite base groups).
    pub fn is_degenerate(&self) -> bool {
        match self.base.order() {
            Some(n) => self.a.len() == n && self.b.len() == n,
            None => false,
        }
    }

    pub fn in_a(&self, x: Elem) -> bool {
        match &self.cosets {
            Cosets::Finite { in_a, .. } => in_a[x.index()],
            Cosets::Trivial => x.0 == 0,
        }
    }

    pub fn in_b(&self, x: Elem) -> bool {
        match &self.cosets {
            Cosets::Finite { in_b, .. } => in_b[x.index()],
            Cosets::Trivial => x.0 == 0,
        }
    }

    pub fn is_x_rep(&self, x: Elem) -> bool {
        match &self.cosets {
            Cosets::Finite { decomp_a, .. } => decomp_a[x.index()].0 == x,
            Cosets::Trivial => true,
        }
    }

    pub fn is_y_rep(&self, x: Elem) -> bool {
        match &self.cosets {
            Cosets::Finite { decomp_b, .. } => decomp_b[x.index()].0 == x,
            Cosets::Trivial => true,
        }
    }

    /// u = x·a with x ∈ X, a ∈ A.
    #[inline]
    pub fn decompose_a(&self, u: Elem) -> (Elem, Elem) {
        match &self.cosets {
            Cosets::Finite { decomp_a, .. } => decomp_a[u.index()],
            Cosets::Trivial => (u, Elem(0)),
        }
    }

    /// u = y·b with y ∈ Y, b ∈ B.
    #[inline]
    pub fn decompose_b(&self, u: Elem) -> (Elem, Elem) {
        match &self.cosets {
            Cosets::Finite { decomp_b, .. } => decomp_b[u.index()],
            Cosets::Trivial => (u, Elem(0)),
        }
    }

    /// φ(a) for a ∈ A.
    #[inline]
    pub fn phi(&self, a: Elem) -> Elem {
        match &self.cosets {
            Cosets::Finite { phi, .. } => phi[a.index()],
            Cosets::Trivial => a,
        }
    }

    /// φ⁻¹(b) for b ∈ B.
    #[inline]
    pub fn phi_inv(&self, b: Elem) -> Elem {
        match &self.cosets {
            Cosets::Finite { phi_inv, .. } => phi_inv[b.index()],
            Cosets::Trivial => b,
        }
    }

    /// Word metric |g| on G₀ with respect to the generators (supp μ₀).
    /// `None` if there are no generators or g is unreachable.
    pub fn word_metric(&self, g: Elem) -> Option<u32> {
        match &self.cosets {
            Cosets::Finite { word_metric, .. } => {
                if self.generators.is_empty() {
                    None
                } else {
                    word_metric[g.index()]
                }
            }
            Cosets::Trivial => integer_word_metric(&self.generators, g.0),
        }
    }

    /// True if the generators reach every element of G₀ by right
    /// multiplication (semigroup generation).
    pub fn generators_span(&self) -> bool {
        match &self.cosets {
            Cosets::Finite { word_metric, .. } => {
                !self.generators.is_empty() && word_metric.iter().all(Option::is_some)
            }
            Cosets::Trivial => {
                let has_pos = self.generators.iter().any(|g| g.0 > 0);
                let has_neg = self.generators.iter().any(|g| g.0 < 0);
                let gcd = self.generators.iter().fold(0i64, |acc, g| gcd(acc, g.0.abs()));
                has_pos && has_neg && gcd == 1
            }
        }
    }

    pub fn name(&self, g: Elem) -> String {
        self.base.name(g)
    }

    /// Parses `t`, `t^-1` or an element name.
    pub fn parse_letter(&self, token: &str) -> Result<Letter, GroupError> {
        match token {
            "t" => Ok(Letter::T),
            "t^-1" => Ok(Letter::TInv),
            name => self
                .base
                .lookup(name)
                .map(Letter::Base)
                .ok_or_else(|| GroupError::UnknownLetter(name.to_string())),
        }
    }

    pub fn parse_word(&self, text: &str) -> Result<Vec<Letter>, GroupError> {
        text.split_whitespace().map(|tok| self.parse_letter(tok)).collect()
    }

    pub fn empty_word(&self) -> NormalForm {
        NormalForm::identity(self.identity())
    }

    /// Multiplies `w` on the right by one letter, in place.
    ///
    /// Amortised O(1): at most one syllable is pushed or popped.
    #[inline]
    pub fn push(&self, w: &mut NormalForm, x: Letter) -> PushEffect {
        let e0 = self.identity();
        match x {
            Letter::Base(g) => {
                w.trailing = self.base.mul(w.trailing, g);
                PushEffect::Base
            }
            Letter::T => {
                let (rep, a) = self.decompose_a(w.trailing);
                let h = self.phi(a);
                if rep == e0 && w.last_sign() == Some(Sign::Minus) {
                    // g t^-1 a t = g φ(a)
                    let s = w.syllables.pop().unwrap();
                    w.trailing = self.base.mul(s.rep, h);
                    PushEffect::Destroyed(s)
                } else {
                    let s = Syllable { rep, sign: Sign::Plus };
                    w.syllables.push(s);
                    w.trailing = h;
                    PushEffect::Created(s)
                }
            }
            Letter::TInv => {
                let (rep, b) = self.decompose_b(w.trailing);
                let h = self.phi_inv(b);
                if rep == e0 && w.last_sign() == Some(Sign::Plus) {
                    let s = w.syllables.pop().unwrap();
                    w.trailing = self.base.mul(s.rep, h);
                    PushEffect::Destroyed(s)
                } else {
                    let s = Syllable { rep, sign: Sign::Minus };
                    w.syllables.push(s);
                    w.trailing = h;
                    PushEffect::Created(s)
                }
            }
        }
    }

    /// Normal form of `w·x`.
    pub fn push_letter(&self, w: &NormalForm, x: Letter) -> NormalForm {
        let mut out = w.clone();
        self.push(&mut out, x);
        out
    }

    /// Left fold of [`push`](Self::push) from the identity.
    pub fn normalize(&self, word: &[Letter]) -> NormalForm {
        let mut w = self.empty_word();
        for &x in word {
            self.push(&mut w, x);
        }
        w
    }

    pub fn normalize_str(&self, text: &str) -> Result<NormalForm, GroupError> {
        Ok(self.normalize(&self.parse_word(text)?))
    }

    /// Letters of the inverse element, g_{n+1}⁻¹ t_n⁻¹ g_n⁻¹ … t_1⁻¹ g_1⁻¹.
    pub fn inverse_letters(&self, w: &NormalForm) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * w.syllables.len() + 1);
        out.push(Letter::Base(self.base.inv(w.trailing)));
        for s in w.syllables.iter().rev() {
            out.push(match s.sign {
                Sign::Plus => Letter::TInv,
                Sign::Minus => Letter::T,
            });
            out.push(Letter::Base(self.base.inv(s.rep)));
        }
        out
    }

    /// Checks the three normal-form conditions on `w`.
    pub fn check_normal_form(&self, w: &NormalForm) -> Result<(), String> {
        let e0 = self.identity();
        if !self.base.contains(w.trailing) {
            return Err(format!("trailing element {} is not in G0", w.trailing));
        }
        for (i, s) in w.syllables.iter().enumerate() {
            let ok = match s.sign {
                Sign::Plus => self.is_x_rep(s.rep),
                Sign::Minus => self.is_y_rep(s.rep),
            };
            if !ok {
                return Err(format!(
                    "syllable {} has `{}` which is not a representative for its sign",
                    i + 1,
                    self.name(s.rep)
                ));
            }
            if i > 0 && s.rep == e0 && w.syllables[i - 1].sign == s.sign.flip() {
                return Err(format!("syllables {} and {} form a cancelling pinch", i, i + 1));
            }
        }
        Ok(())
    }

    /// Human-readable normal form; identity letters e₀ are omitted.
    pub fn format(&self, w: &NormalForm) -> String {
        let e0 = self.identity();
        let mut parts: Vec<String> = Vec::new();
        for s in &w.syllables {
            if s.rep != e0 {
                parts.push(self.name(s.rep));
            }
            parts.push(match s.sign {
                Sign::Plus => "t".into(),
                Sign::Minus => "t^-1".into(),
            });
        }
        if w.trailing != e0 || parts.is_empty() {
            parts.push(self.name(w.trailing));
        }
        parts.join(" ")
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Word metric on ℤ for a finite generating multiset, by breadth-first
/// search restricted to a window around [min(0,g), max(0,g)]. Because ℤ is
/// abelian every word can be reordered to stay inside that window.
fn integer_word_metric(gens: &[Elem], g: i64) -> Option<u32> {
    if g == 0 {
        return Some(0);
    }
    if gens.is_empty() {
        return None;
    }
    let m = gens.iter().map(|s| s.0.abs()).max().unwrap();
    let lo = g.min(0) - m;
    let hi = g.max(0) + m;
    let width = (hi - lo + 1) as usize;
    let mut dist = vec![u32::MAX; width];
    let mut queue = VecDeque::new();
    dist[(0 - lo) as usize] = 0;
    queue.push_back(0i64);
    while let Some(x) = queue.pop_front() {
        let d = dist[(x - lo) as usize];
        for s in gens {
            let y = x + s.0;
            if y < lo || y > hi {
                continue;
            }
            let slot = &mut dist[(y - lo) as usize];
            if *slot == u32::MAX {
                *slot = d + 1;
                if y == g {
                    return Some(d + 1);
                }
                queue.push_back(y);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::catalog;

    fn klein() -> HnnPresentation {
        let spec = catalog::example_klein_four();
        validate_presentation(&spec, &["a".into(), "b".into()]).unwrap()
    }

    fn names(p: &HnnPresentation, v: &[Elem]) -> Vec<String> {
        v.iter().map(|&e| p.name(e)).collect()
    }

    #[test]
    fn klein_four_representatives() {
        let p = klein();
        assert_eq!(names(&p, p.x_reps()), vec!["e", "b"]);
        assert_eq!(names(&p, p.y_reps()), vec!["e", "a"]);
    }

    #[test]
    fn representatives_do_not_depend_on_generator_listing_order() {
        let spec = catalog::example_klein_four();
        let p = validate_presentation(&spec, &["b".into(), "a".into()]).unwrap();
        assert_eq!(names(&p, p.x_reps()), vec!["e", "b"]);
    }

    #[test]
    fn phi_into_wrong_subgroup_is_rejected() {
        let mut spec = catalog::example_klein_four();
        spec.phi.insert("a".into(), "a".into());
        let err = validate_presentation(&spec, &[]).unwrap_err();
        assert!(matches!(err, GroupError::NotAnIsomorphism(_)), "{err}");
    }

    #[test]
    fn subgroup_without_identity_is_rejected() {
        let mut spec = catalog::example_klein_four();
        spec.subgroup_a = vec!["a".into()];
        spec.phi.remove("e");
        let err = validate_presentation(&spec, &[]).unwrap_err();
        assert!(matches!(err, GroupError::NotASubgroup(_)), "{err}");
    }

    #[test]
    fn non_closed_subset_is_rejected() {
        let spec = catalog::cyclic_spec(4, &[0, 1], &[0, 1], &[(0, 0), (1, 1)]);
        let err = validate_presentation(&spec, &[]).unwrap_err();
        assert!(matches!(err, GroupError::NotASubgroup(_)), "{err}");
    }

    #[test]
    fn non_homomorphism_is_rejected() {
        // Z/4 with A = B = G0 and a bijection that is not an automorphism.
        let spec = catalog::cyclic_spec(4, &[0, 1, 2, 3], &[0, 1, 2, 3], &[(0, 0), (1, 2), (2, 1), (3, 3)]);
        let err = validate_presentation(&spec, &[]).unwrap_err();
        assert!(matches!(err, GroupError::NotAnIsomorphism(_)), "{err}");
    }

    #[test]
    fn integers_with_nontrivial_subgroup_is_rejected() {
        let mut spec = catalog::integers_spec();
        spec.subgroup_a.push("2".into());
        assert_eq!(validate_presentation(&spec, &[]).unwrap_err(), GroupError::TrivialityViolation);
    }

    #[test]
    fn integer_word_metric_matches_brute_force() {
        let gens = [Elem(-2), Elem(3)];
        for g in -12i64..=12 {
            // brute force: minimal i + j with 3i - 2j = g, i, j >= 0
            let mut best = u32::MAX;
            for i in 0..40i64 {
                for j in 0..40i64 {
                    if 3 * i - 2 * j == g {
                        best = best.min((i + j) as u32);
                    }
                }
            }
            assert_eq!(integer_word_metric(&gens, g), Some(best), "g = {g}");
        }
    }

    #[test]
    fn integers_span_check() {
        let spec = catalog::integers_spec();
        let p = validate_presentation(&spec, &["1".into(), "-1".into()]).unwrap();
        assert!(p.generators_span());
        let p = validate_presentation(&spec, &["2".into(), "-2".into()]).unwrap();
        assert!(!p.generators_span());
        let p = validate_presentation(&spec, &["1".into()]).unwrap();
        assert!(!p.generators_span());
    }
}
