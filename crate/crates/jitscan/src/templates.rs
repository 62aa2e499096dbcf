//! Built-in prompt templates and few-shot examples.

use std::fs;
use std::path::Path;

use jitscan_core::agent::{FewShotExample, PromptTemplates};
use sha2::{Digest, Sha256};

use crate::error::{io_at, Error, Result};

const PLAIN: &str = include_str!("../templates/plain.txt");
const DEP_AUG: &str = include_str!("../templates/dep_aug.txt");
const REACT: &str = include_str!("../templates/react.txt");
const COT: &str = include_str!("../templates/cot.txt");

/// Shipped examples, keyed by file name.
pub const FEW_SHOT: [(&str, &str); 10] = [
    ("cwe-787.txt", include_str!("../templates/fewshot/cwe-787.txt")),
    ("cwe-125.txt", include_str!("../templates/fewshot/cwe-125.txt")),
    ("cwe-416.txt", include_str!("../templates/fewshot/cwe-416.txt")),
    ("cwe-78.txt", include_str!("../templates/fewshot/cwe-78.txt")),
    ("cwe-22.txt", include_str!("../templates/fewshot/cwe-22.txt")),
    ("cwe-20.txt", include_str!("../templates/fewshot/cwe-20.txt")),
    ("cwe-476.txt", include_str!("../templates/fewshot/cwe-476.txt")),
    ("cwe-190.txt", include_str!("../templates/fewshot/cwe-190.txt")),
    ("cwe-119.txt", include_str!("../templates/fewshot/cwe-119.txt")),
    ("cwe-918.txt", include_str!("../templates/fewshot/cwe-918.txt")),
];

fn parse_example(name: &str, text: &str) -> Result<FewShotExample> {
    FewShotExample::parse(text).map_err(|e| Error::Config(format!("few-shot example {name}: {e}")))
}

pub fn builtin() -> PromptTemplates {
    PromptTemplates {
        plain: PLAIN.into(),
        dep_aug: DEP_AUG.into(),
        react: REACT.into(),
        cot_instruction: COT.trim_end().into(),
        examples: FEW_SHOT
            .iter()
            .map(|(name, text)| parse_example(name, text).expect("shipped examples parse"))
            .collect(),
    }
}

/// Templates from `dir`. Each of `plain.txt`, `dep_aug.txt`, `react.txt`
/// and `cot.txt` replaces the built-in one when present; a `fewshot/`
/// directory replaces the whole example set, read in file name order.
pub fn load_dir(dir: &Path) -> Result<PromptTemplates> {
    let mut t = builtin();
    let read = |name: &str| -> Result<Option<String>> {
        let p = dir.join(name);
        if p.exists() {
            fs::read_to_string(&p).map(Some).map_err(io_at(&p))
        } else {
            Ok(None)
        }
    };
    if let Some(s) = read("plain.txt")? {
        t.plain = s;
    }
    if let Some(s) = read("dep_aug.txt")? {
        t.dep_aug = s;
    }
    if let Some(s) = read("react.txt")? {
        t.react = s;
    }
    if let Some(s) = read("cot.txt")? {
        t.cot_instruction = s.trim_end().into();
    }
    let fewshot = dir.join("fewshot");
    if fewshot.is_dir() {
        let mut names: Vec<_> = fs::read_dir(&fewshot)
            .map_err(io_at(&fewshot))?
            .filter_map(|e| e.ok())
            .map(|e| e.path())
            .filter(|p| p.extension().is_some_and(|x| x == "txt"))
            .collect();
        names.sort();
        t.examples = names
            .iter()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(io_at(p))?;
                parse_example(&p.display().to_string(), &text)
            })
            .collect::<Result<_>>()?;
    }
    Ok(t)
}

/// Hex SHA-256 over every template text and example.
pub fn digest(t: &PromptTemplates) -> String {
    let mut h = Sha256::new();
    for part in [&t.plain, &t.dep_aug, &t.react, &t.cot_instruction] {
        h.update(part.as_bytes());
        h.update([0]);
    }
    for ex in &t.examples {
        for part in [
            ex.cwe_id.as_str(),
            &ex.vulnerable_code,
            &ex.vulnerable_explanation,
            &ex.benign_code,
            &ex.benign_explanation,
        ] {
            h.update(part.as_bytes());
            h.update([0]);
        }
    }
    hex::encode(h.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_set_is_complete() {
        let t = builtin();
        assert_eq!(t.examples.len(), 10);
        assert_eq!(t.cot_instruction, "Solve this problem step by step.");
        for tpl in [&t.plain, &t.dep_aug, &t.react] {
            assert!(tpl.contains("{target_function}") && tpl.contains("{examples}") && tpl.contains("{cot}"));
        }
        assert!(t.dep_aug.contains("{dependencies}"));
    }

    #[test]
    fn directory_overrides() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("plain.txt"), "P {target_function}").unwrap();
        fs::create_dir(dir.path().join("fewshot")).unwrap();
        fs::write(dir.path().join("fewshot/a.txt"), FEW_SHOT[0].1).unwrap();
        let t = load_dir(dir.path()).unwrap();
        assert_eq!(t.plain, "P {target_function}");
        assert_eq!(t.react, builtin().react);
        assert_eq!(t.examples.len(), 1);
        assert_ne!(digest(&t), digest(&builtin()));
    }
}
