use std::str::FromStr;

use super::tokenize;

const DEFAULT_RULES: &str = include_str!("../../data/phoneme_rules.txt");

pub trait Phonemizer: Send + Sync {
    /// Number of phonemes in cleaned text.
    fn count(&self, text: &str) -> usize;
}

fn is_vowel(c: char) -> bool {
    matches!(
        c,
        'a' | 'e' | 'i' | 'o' | 'u' | 'y' | 'à' | 'â' | 'ä' | 'é' | 'è' | 'ê' | 'ë' | 'î' | 'ï' | 'ô' | 'ö'
            | 'ù' | 'û' | 'ü' | 'ÿ' | 'œ' | 'æ'
    )
}

fn is_consonant(c: char) -> bool {
    c.is_alphabetic() && !is_vowel(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Atom {
    Literal(char),
    Vowel,
    Consonant,
    /// Consonant other than n, m, h.
    Obstruent,
}

impl Atom {
    fn matches(self, c: char) -> bool {
        match self {
            Atom::Literal(l) => l == c,
            Atom::Vowel => is_vowel(c),
            Atom::Consonant => is_consonant(c),
            Atom::Obstruent => is_consonant(c) && !matches!(c, 'n' | 'm' | 'h'),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PhonemeRule {
    atoms: Vec<Atom>,
    at_start: bool,
    at_end: bool,
    pub delta: i32,
}

impl PhonemeRule {
    /// Start offsets of non-overlapping matches, scanning left to right.
    fn matches_in(&self, word: &[char]) -> usize {
        let len = self.atoms.len();
        if len == 0 || len > word.len() {
            return 0;
        }
        let mut count = 0;
        let mut i = 0;
        while i + len <= word.len() {
            let ok = (!self.at_start || i == 0)
                && (!self.at_end || i + len == word.len())
                && self.atoms.iter().zip(&word[i..i + len]).all(|(a, &c)| a.matches(c));
            if ok {
                count += 1;
                i += len;
            } else {
                i += 1;
            }
        }
        count
    }
}

impl FromStr for PhonemeRule {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let (pattern, delta) = line
            .split_once("->")
            .ok_or_else(|| format!("expected `pattern -> delta`, got `{line}`"))?;
        let delta: i32 = delta
            .trim()
            .parse()
            .map_err(|_| format!("bad delta in `{line}`"))?;
        let mut pattern = pattern.trim();
        let at_start = pattern.starts_with('^');
        if at_start {
            pattern = &pattern[1..];
        }
        let at_end = pattern.ends_with('$');
        if at_end {
            pattern = &pattern[..pattern.len() - 1];
        }
        let atoms: Vec<Atom> = pattern
            .chars()
            .map(|c| match c {
                'V' => Atom::Vowel,
                'C' => Atom::Consonant,
                'N' => Atom::Obstruent,
                c => Atom::Literal(c),
            })
            .collect();
        if atoms.is_empty() {
            return Err(format!("empty pattern in `{line}`"));
        }
        Ok(PhonemeRule {
            atoms,
            at_start,
            at_end,
            delta,
        })
    }
}

/// Grapheme-based phoneme estimate driven by a rule file.
///
/// Each word starts at one phoneme per consonant letter plus one per
/// maximal vowel group; every rule then adds its delta once per match.
/// Word counts are floored at zero.
#[derive(Debug, Clone)]
pub struct RulePhonemizer {
    rules: Vec<PhonemeRule>,
}

impl RulePhonemizer {
    pub fn builtin() -> Self {
        Self::from_rules(DEFAULT_RULES).expect("shipped phoneme rules are valid")
    }

    pub fn from_rules(text: &str) -> Result<Self, String> {
        let rules = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
            .map(|(i, l)| l.parse().map_err(|e| format!("line {}: {e}", i + 1)))
            .collect::<Result<_, _>>()?;
        Ok(RulePhonemizer { rules })
    }

    pub fn count_word(&self, word: &str) -> usize {
        let chars: Vec<char> = word.chars().filter(|c| c.is_alphabetic()).collect();
        if chars.is_empty() {
            return 0;
        }
        let mut total: i64 = 0;
        let mut in_vowels = false;
        for &c in &chars {
            if is_vowel(c) {
                if !in_vowels {
                    total += 1;
                }
                in_vowels = true;
            } else {
                total += 1;
                in_vowels = false;
            }
        }
        for rule in &self.rules {
            total += rule.delta as i64 * rule.matches_in(&chars) as i64;
        }
        total.max(0) as usize
    }
}

impl Phonemizer for RulePhonemizer {
    fn count(&self, text: &str) -> usize {
        tokenize(text).iter().map(|t| self.count_word(&t.surface)).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_words() {
        let p = RulePhonemizer::builtin();
        assert_eq!(p.count(""), 0);
        // /papa/
        assert_eq!(p.count("papa"), 4);
        // /o/
        assert_eq!(p.count("eau"), 1);
        // /lə ʃa dɔʁ/
        assert_eq!(p.count("le chat dort"), 2 + 2 + 3);
        // /bɔ̃ʒuʁ/ /ɛl/ /pɔʁt/ /mwa/ /ɑ̃fɑ̃/
        for (w, n) in [("bonjour", 5), ("elle", 2), ("portes", 4), ("moi", 3), ("enfant", 3), ("beaucoup", 4)] {
            assert_eq!(p.count(w), n, "{w}");
        }
    }

    #[test]
    fn rule_syntax() {
        let r: PhonemeRule = "^VnN$ -> -2".parse().unwrap();
        assert!(r.at_start && r.at_end);
        assert_eq!(r.delta, -2);
        assert_eq!(r.matches_in(&"ant".chars().collect::<Vec<_>>()), 1);
        assert_eq!(r.matches_in(&"anta".chars().collect::<Vec<_>>()), 0);
        assert!("ab".parse::<PhonemeRule>().is_err());
        assert!("-> 1".parse::<PhonemeRule>().is_err());
        assert!(RulePhonemizer::from_rules("# c\nx -> +1\n").is_ok());
    }

    #[test]
    fn non_overlapping_matches() {
        let r: PhonemeRule = "ll -> -1".parse().unwrap();
        assert_eq!(r.matches_in(&"llll".chars().collect::<Vec<_>>()), 2);
        assert_eq!(r.matches_in(&"lll".chars().collect::<Vec<_>>()), 1);
    }

    #[test]
    fn counts_never_negative() {
        let p = RulePhonemizer::from_rules("a -> -5\n").unwrap();
        assert_eq!(p.count("a"), 0);
    }
}
