//! Ready-made group specifications used by tests, examples and the CLI.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;

use super::presentation::{BaseGroupSpec, GroupSpec};

fn table_spec(names: Vec<String>, mul: impl Fn(usize, usize) -> usize) -> BaseGroupSpec {
    let n = names.len();
    let table = (0..n)
        .map(|i| (0..n).map(|j| names[mul(i, j)].clone()).collect())
        .collect();
    BaseGroupSpec::FiniteTable {
        identity: names[0].clone(),
        elements: names,
        table,
    }
}

fn phi_map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// ℤ/2×ℤ/2 = {e, a, b, ab} as a multiplication table.
pub fn klein_four_base() -> BaseGroupSpec {
    // bit 0 = a, bit 1 = b
    let names = strings(&["e", "a", "b", "ab"]);
    table_spec(names, |i, j| i ^ j)
}

/// The ℤ/2×ℤ/2 example with A = {e, a}, B = {e, b}, φ(a) = b.
pub fn example_klein_four() -> GroupSpec {
    GroupSpec {
        base_group: klein_four_base(),
        subgroup_a: strings(&["e", "a"]),
        subgroup_b: strings(&["e", "b"]),
        phi: phi_map(&[("e", "e"), ("a", "b")]),
    }
}

/// ℤ/2×ℤ/2 with A = B = G₀ and φ swapping a and b.
pub fn degenerate_klein_four() -> GroupSpec {
    GroupSpec {
        base_group: klein_four_base(),
        subgroup_a: strings(&["e", "a", "b", "ab"]),
        subgroup_b: strings(&["e", "a", "b", "ab"]),
        phi: phi_map(&[("e", "e"), ("a", "b"), ("b", "a"), ("ab", "ab")]),
    }
}

/// Element names of ℤ/n: `e`, `g`, `g^2`, …
pub fn cyclic_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|k| match k {
            0 => "e".to_string(),
            1 => "g".to_string(),
            k => format!("g^{k}"),
        })
        .collect()
}

/// ℤ/n with subgroups and φ given by exponents of the generator.
pub fn cyclic_spec(n: usize, a: &[usize], b: &[usize], phi: &[(usize, usize)]) -> GroupSpec {
    let names = cyclic_names(n);
    GroupSpec {
        subgroup_a: a.iter().map(|&k| names[k].clone()).collect(),
        subgroup_b: b.iter().map(|&k| names[k].clone()).collect(),
        phi: phi
            .iter()
            .map(|&(x, y)| (names[x].clone(), names[y].clone()))
            .collect(),
        base_group: table_spec(names, |i, j| (i + j) % n),
    }
}

/// Element names of the dihedral group of order 2m: `e`, `r`, `r^2`, …, `s`, `rs`, `r^2s`, …
/// (element r^k s^f has index k + m·f).
pub fn dihedral_names(m: usize) -> Vec<String> {
    let rot = |k: usize| match k {
        0 => String::new(),
        1 => "r".to_string(),
        k => format!("r^{k}"),
    };
    let mut names = Vec::with_capacity(2 * m);
    for k in 0..m {
        names.push(if k == 0 { "e".to_string() } else { rot(k) });
    }
    for k in 0..m {
        names.push(format!("{}s", rot(k)));
    }
    names
}

/// Multiplication in the dihedral group of order 2m on dense indices.
pub fn dihedral_mul(m: usize, i: usize, j: usize) -> usize {
    let (k1, f1) = (i % m, i / m);
    let (k2, f2) = (j % m, j / m);
    // r^k1 s^f1 r^k2 s^f2 = r^(k1 ± k2) s^(f1+f2)
    let k = if f1 == 0 { (k1 + k2) % m } else { (k1 + m - k2) % m };
    k + m * ((f1 + f2) % 2)
}

pub fn dihedral_base(m: usize) -> BaseGroupSpec {
    table_spec(dihedral_names(m), |i, j| dihedral_mul(m, i, j))
}

/// ℤ with A = B = {0}; the HNN extension is the free group ℤ * ℤ.
pub fn integers_spec() -> GroupSpec {
    GroupSpec {
        base_group: BaseGroupSpec::Integers,
        subgroup_a: strings(&["0"]),
        subgroup_b: strings(&["0"]),
        phi: phi_map(&[("0", "0")]),
    }
}

/// A random presentation over ℤ/n or a dihedral group of order at most
/// `max_order`, with A and B cyclic subgroups of equal order and φ mapping
/// generator to generator. Returns the group description and a generating support for μ₀.
pub fn random_presentation<R: Rng + ?Sized>(rng: &mut R, max_order: usize) -> (GroupSpec, Vec<String>) {
    assert!(max_order >= 6);
    let (names, mul): (Vec<String>, Box<dyn Fn(usize, usize) -> usize>) = if rng.gen_bool(0.5) {
        let n = rng.gen_range(2..=max_order);
        (cyclic_names(n), Box::new(move |i, j| (i + j) % n))
    } else {
        let m = rng.gen_range(3..=max_order / 2);
        (dihedral_names(m), Box::new(move |i, j| dihedral_mul(m, i, j)))
    };
    let n = names.len();
    let powers = |x: usize| {
        let mut out = vec![0usize];
        let mut y = x;
        while y != 0 {
            out.push(y);
            y = mul(y, x);
        }
        out
    };
    let x = rng.gen_range(0..n);
    let px = powers(x);
    let same_order: Vec<usize> = (0..n).filter(|&y| powers(y).len() == px.len()).collect();
    let y = *same_order.choose(rng).unwrap();
    let py = powers(y);
    let phi = px
        .iter()
        .zip(&py)
        .map(|(&a, &b)| (names[a].clone(), names[b].clone()))
        .collect();
    let spec = GroupSpec {
        subgroup_a: px.iter().map(|&k| names[k].clone()).collect(),
        subgroup_b: py.iter().map(|&k| names[k].clone()).collect(),
        phi,
        base_group: table_spec(names.clone(), mul),
    };
    (spec, names[1..].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::validate_presentation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn presets_validate() {
        assert!(validate_presentation(&example_klein_four(), &[]).is_ok());
        let p = validate_presentation(&degenerate_klein_four(), &[]).unwrap();
        assert!(p.is_degenerate());
        for m in 3..8 {
            let spec = GroupSpec {
                base_group: dihedral_base(m),
                subgroup_a: strings(&["e"]),
                subgroup_b: strings(&["e"]),
                phi: phi_map(&[("e", "e")]),
            };
            assert!(validate_presentation(&spec, &[]).is_ok(), "D{m}");
        }
    }

    #[test]
    fn random_presentations_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (spec, gens) = random_presentation(&mut rng, 24);
            let p = validate_presentation(&spec, &gens).unwrap();
            assert!(p.base().order().unwrap() <= 24);
            assert!(p.generators_span());
        }
    }
}
