//! Random words and random relator moves, for confluence testing.
//!
//! Every move replaces a factor of the word by another spelling of the same
//! group element, so the result always represents the same element as the
//! input. The moves use only the defining relations of the HNN extension and
//! the multiplication table of G₀.

use rand::seq::SliceRandom;
use rand::Rng;

use super::base::{BaseGroup, Elem};
use super::normal_form::Letter;
use super::presentation::HnnPresentation;

fn random_base<R: Rng + ?Sized>(p: &HnnPresentation, rng: &mut R) -> Elem {
    match p.base() {
        BaseGroup::Finite(g) => Elem(rng.gen_range(0..g.order() as i64)),
        BaseGroup::Integers => Elem(rng.gen_range(-4..=4)),
    }
}

/// A uniformly random word: half base letters, a quarter each t and t⁻¹.
pub fn random_word<R: Rng + ?Sized>(p: &HnnPresentation, len: usize, rng: &mut R) -> Vec<Letter> {
    (0..len)
        .map(|_| match rng.gen_range(0..4) {
            0 => Letter::T,
            1 => Letter::TInv,
            _ => Letter::Base(random_base(p, rng)),
        })
        .collect()
}

fn inverse(p: &HnnPresentation, x: Letter) -> Letter {
    match x {
        Letter::Base(g) => Letter::Base(p.base().inv(g)),
        Letter::T => Letter::TInv,
        Letter::TInv => Letter::T,
    }
}

/// Applies one random element-preserving move in place. Returns false if the
/// chosen move did not apply at the chosen position.
pub fn random_move<R: Rng + ?Sized>(p: &HnnPresentation, w: &mut Vec<Letter>, rng: &mut R) -> bool {
    let base = p.base();
    let pos = rng.gen_range(0..=w.len());
    match rng.gen_range(0..7) {
        // insert x x⁻¹
        0 => {
            let x = *[Letter::T, Letter::TInv, Letter::Base(random_base(p, rng))]
                .choose(rng)
                .unwrap();
            w.insert(pos, inverse(p, x));
            w.insert(pos, x);
            true
        }
        // delete an adjacent x x⁻¹
        1 => {
            if pos + 1 < w.len() && w[pos + 1] == inverse(p, w[pos]) {
                w.drain(pos..pos + 2);
                true
            } else {
                false
            }
        }
        // split a base letter g into (g·h⁻¹)(h), biased towards h ∈ A ∪ B
        2 => {
            if let Some(&Letter::Base(g)) = w.get(pos) {
                let h = match rng.gen_range(0..3) {
                    0 => *p.subgroup_a().choose(rng).unwrap_or(&base.identity()),
                    1 => *p.subgroup_b().choose(rng).unwrap_or(&base.identity()),
                    _ => random_base(p, rng),
                };
                w[pos] = Letter::Base(base.mul(g, base.inv(h)));
                w.insert(pos + 1, Letter::Base(h));
                true
            } else {
                false
            }
        }
        // merge two adjacent base letters
        3 => match (w.get(pos), w.get(pos + 1)) {
            (Some(&Letter::Base(g)), Some(&Letter::Base(h))) => {
                w[pos] = Letter::Base(base.mul(g, h));
                w.remove(pos + 1);
                true
            }
            _ => false,
        },
        // a t -> t φ(a)   and   b t⁻¹ -> t⁻¹ φ⁻¹(b)
        4 => match (w.get(pos), w.get(pos + 1)) {
            (Some(&Letter::Base(a)), Some(&Letter::T)) if p.in_a(a) => {
                w[pos] = Letter::T;
                w[pos + 1] = Letter::Base(p.phi(a));
                true
            }
            (Some(&Letter::Base(b)), Some(&Letter::TInv)) if p.in_b(b) => {
                w[pos] = Letter::TInv;
                w[pos + 1] = Letter::Base(p.phi_inv(b));
                true
            }
            _ => false,
        },
        // t b -> φ⁻¹(b) t   and   t⁻¹ a -> φ(a) t⁻¹
        5 => match (w.get(pos), w.get(pos + 1)) {
            (Some(&Letter::T), Some(&Letter::Base(b))) if p.in_b(b) => {
                w[pos] = Letter::Base(p.phi_inv(b));
                w[pos + 1] = Letter::T;
                true
            }
            (Some(&Letter::TInv), Some(&Letter::Base(a))) if p.in_a(a) => {
                w[pos] = Letter::Base(p.phi(a));
                w[pos + 1] = Letter::TInv;
                true
            }
            _ => false,
        },
        // drop an identity letter
        _ => {
            if w.get(pos) == Some(&Letter::Base(base.identity())) {
                w.remove(pos);
                true
            } else {
                false
            }
        }
    }
}

/// A word equal in G to `word`, obtained by `moves` successful random moves.
pub fn random_equivalent<R: Rng + ?Sized>(
    p: &HnnPresentation,
    word: &[Letter],
    moves: usize,
    rng: &mut R,
) -> Vec<Letter> {
    let mut w = word.to_vec();
    let mut done = 0;
    let mut attempts = 0;
    while done < moves && attempts < 50 * moves + 50 {
        attempts += 1;
        if random_move(p, &mut w, rng) {
            done += 1;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{catalog, validate_presentation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn moves_preserve_the_element() {
        let p = validate_presentation(&catalog::example_klein_four(), &[]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..2000 {
            let len = rng.gen_range(0..20);
            let u = random_word(&p, len, &mut rng);
            let v = random_equivalent(&p, &u, 12, &mut rng);
            assert_eq!(p.normalize(&u), p.normalize(&v), "{u:?} vs {v:?}");
        }
    }

    #[test]
    fn moves_preserve_the_element_over_the_integers() {
        let p = validate_presentation(&catalog::integers_spec(), &["1".into(), "-1".into()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..2000 {
            let len = rng.gen_range(0..20);
            let u = random_word(&p, len, &mut rng);
            let v = random_equivalent(&p, &u, 12, &mut rng);
            assert_eq!(p.normalize(&u), p.normalize(&v));
        }
    }
}
