use serde::{Deserialize, Serialize};

use super::base::Elem;

/// Exponent of a stable letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

/// A letter of the alphabet G₀ ∪ {t, t⁻¹}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Letter {
    Base(Elem),
    T,
    TInv,
}

/// One `g t^{±1}` block of a normal form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Syllable {
    pub rep: Elem,
    pub sign: Sign,
}

/// What a single push did to the syllable stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PushEffect {
    /// A base-group letter was folded into the trailing element.
    Base,
    /// A new syllable was appended.
    Created(Syllable),
    /// The last syllable cancelled and was removed.
    Destroyed(Syllable),
}

/// Normal form g₁t₁g₂t₂…gₙtₙg_{n+1}: a stack of syllables plus the trailing
/// base-group element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct NormalForm {
    pub(crate) syllables: Vec<Syllable>,
    pub(crate) trailing: Elem,
}

impl NormalForm {
    pub fn identity(e0: Elem) -> Self {
        Self {
            syllables: Vec::new(),
            trailing: e0,
        }
    }

    /// Builds a normal form from raw parts without checking the invariants;
    /// see [`HnnPresentation::check_normal_form`](super::HnnPresentation::check_normal_form).
    pub fn from_parts(syllables: Vec<Syllable>, trailing: Elem) -> Self {
        Self { syllables, trailing }
    }

    pub fn syllables(&self) -> &[Syllable] {
        &self.syllables
    }

    pub fn trailing(&self) -> Elem {
        self.trailing
    }

    #[inline]
    pub fn last_sign(&self) -> Option<Sign> {
        self.syllables.last().map(|s| s.sign)
    }

    /// Number of stable letters n.
    #[inline]
    pub fn t_length(&self) -> usize {
        self.syllables.len()
    }

    /// Normal-form word length: 2n, plus one for a non-identity trailing
    /// element. Interior identity syllables are counted.
    pub fn word_length(&self, e0: Elem) -> usize {
        2 * self.syllables.len() + usize::from(self.trailing != e0)
    }

    /// `[g]`: the same syllables with the trailing element reset to e₀.
    pub fn strip_trailing(&self, e0: Elem) -> NormalForm {
        NormalForm {
            syllables: self.syllables.clone(),
            trailing: e0,
        }
    }

    /// Position on the ℤ-projection ψ when all syllables share one sign
    /// (always the case when A = B = G₀).
    pub fn signed_depth(&self) -> Option<i64> {
        let n = self.syllables.len() as i64;
        match self.syllables.first() {
            None => Some(0),
            Some(first) => {
                if self.syllables.iter().all(|s| s.sign == first.sign) {
                    Some(n * first.sign.as_i8() as i64)
                } else {
                    None
                }
            }
        }
    }

    /// Letter sequence g₁ t₁ … gₙ tₙ g_{n+1}, identity letters included.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * self.syllables.len() + 1);
        for s in &self.syllables {
            out.push(Letter::Base(s.rep));
            out.push(match s.sign {
                Sign::Plus => Letter::T,
                Sign::Minus => Letter::TInv,
            });
        }
        out.push(Letter::Base(self.trailing));
        out
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use crate::group::catalog;
    use crate::group::moves::random_word;
    use crate::group::{validate_presentation, HnnPresentation, Letter, PushEffect};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn klein() -> HnnPresentation {
        validate_presentation(&catalog::example_klein_four(), &["a".into(), "b".into()]).unwrap()
    }

    #[test]
    fn push_examples() {
        let p = klein();
        let w = p.normalize_str("a b t^-1").unwrap();
        assert_eq!(p.format(&w), "a t^-1 a");
        assert_eq!(w.t_length(), 1);
        assert_eq!(w.word_length(p.identity()), 3);

        let w = p.normalize_str("t b t^-1").unwrap();
        assert_eq!(p.format(&w), "a");
        assert_eq!(w.t_length(), 0);

        let w = p.normalize_str("t t^-1").unwrap();
        assert_eq!(w, p.empty_word());

        let left = p.normalize_str("a t t").unwrap();
        let right = p.normalize_str("t b t").unwrap();
        assert_eq!(left, right);
        assert_eq!(p.format(&left), "t b t");
    }

    #[test]
    fn relator_move_links_the_two_spellings() {
        // a t -> t φ(a) turns "a t t" into "t b t" in one move.
        let p = klein();
        let a = p.base().lookup("a").unwrap();
        let b = p.base().lookup("b").unwrap();
        assert_eq!(p.phi(a), b);
        let moved = [Letter::T, Letter::Base(p.phi(a)), Letter::T];
        assert_eq!(p.normalize(&moved), p.normalize_str("a t t").unwrap());
    }

    #[test]
    fn normalize_examples() {
        let p = klein();
        assert_eq!(p.normalize(&[]), p.empty_word());
        let w = p.normalize_str("t t t").unwrap();
        assert_eq!(w.t_length(), 3);
        assert!(w.syllables().iter().all(|s| s.rep == p.identity()));
        assert_eq!(w.trailing(), p.identity());
        assert_eq!(w.word_length(p.identity()), 6);
        assert_eq!(p.normalize_str("t t").unwrap().t_length(), 2);
        assert_eq!(p.normalize_str("").unwrap().word_length(p.identity()), 0);
        assert!(p.normalize_str("a x").is_err());
    }

    #[test]
    fn strip_trailing_examples() {
        let p = klein();
        let e0 = p.identity();
        let w = p.normalize_str("a b t^-1").unwrap();
        assert_eq!(p.format(&w.strip_trailing(e0)), "a t^-1");
        assert_eq!(p.empty_word().strip_trailing(e0), p.empty_word());
        let once = w.strip_trailing(e0);
        assert_eq!(once.strip_trailing(e0), once);
    }

    proptest! {
        #[test]
        fn normal_form_laws(seed in any::<u64>(), len in 0usize..60) {
            let p = klein();
            let e0 = p.identity();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let word = random_word(&p, len, &mut rng);
            let w = p.normalize(&word);
            prop_assert!(p.check_normal_form(&w).is_ok());

            let mut both = word.clone();
            both.extend(p.inverse_letters(&w));
            prop_assert_eq!(p.normalize(&both), p.empty_word());

            prop_assert_eq!(p.normalize(&w.letters()), w.clone());

            if w.t_length() >= 1 {
                let wl = w.word_length(e0) as i64;
                let n = w.t_length() as i64;
                prop_assert!(wl >= 2 * n - 1 && wl <= 2 * n + 1);
            }

            for g in p.base().elements().unwrap() {
                for h in p.base().elements().unwrap() {
                    let two = p.push_letter(&p.push_letter(&w, Letter::Base(g)), Letter::Base(h));
                    let one = p.push_letter(&w, Letter::Base(p.base().mul(g, h)));
                    prop_assert_eq!(two, one);
                }
            }
        }

        #[test]
        fn push_changes_t_length_by_at_most_one(seed in any::<u64>(), len in 0usize..40) {
            let p = klein();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut w = p.empty_word();
            for x in random_word(&p, len, &mut rng) {
                let before = w.t_length() as i64;
                let effect = p.push(&mut w, x);
                let after = w.t_length() as i64;
                match (x, effect) {
                    (Letter::Base(_), PushEffect::Base) => prop_assert_eq!(before, after),
                    (Letter::T | Letter::TInv, PushEffect::Created(_)) => prop_assert_eq!(after, before + 1),
                    (Letter::T | Letter::TInv, PushEffect::Destroyed(_)) => prop_assert_eq!(after, before - 1),
                    other => prop_assert!(false, "unexpected push outcome {:?}", other),
                }
            }
        }
    }
}
