//! Scenario files bundled with the binary.

pub const DEMOS: &[(&str, &str)] = &[
    ("trine-negativity", include_str!("../scenarios/trine-negativity.json")),
    ("chsh-singlet", include_str!("../scenarios/chsh-singlet.json")),
    ("werner-scan", include_str!("../scenarios/werner-scan.json")),
    ("qutrit-context-invariance", include_str!("../scenarios/qutrit-context-invariance.json")),
];

pub fn demo(name: &str) -> Option<&'static str> {
    DEMOS.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

pub fn demo_names() -> impl Iterator<Item = &'static str> {
    DEMOS.iter().map(|(n, _)| *n)
}
