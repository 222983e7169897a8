//! Bundled configurations for the reference scenarios.

pub struct Recipe {
    pub name: &'static str,
    pub target: &'static str,
    pub text: &'static str,
}

macro_rules! recipe {
    ($name:literal, $target:literal) => {
        Recipe {
            name: $name,
            target: $target,
            text: include_str!(concat!("../recipes/", $name, ".json")),
        }
    };
}

pub const RECIPES: &[Recipe] = &[
    recipe!("fig3_green", "four-level correlated hopping, opposite couplings, shifted resonance"),
    recipe!("fig3_blue", "same-sign couplings driven at the bare resonance"),
    recipe!("fig3_magenta", "same-sign couplings driven at the shifted resonance"),
    recipe!("fig4_static", "full two-body dynamics with a static impurity"),
    recipe!("fig4_quench", "trap quench from the d_R = 2, r = 1.4 geometry"),
    recipe!("fig4_micromotion", "impurity in a Paul trap with micromotion"),
    recipe!("fig5_pulse", "condensate transfer with the compensating pulse"),
    recipe!("spectrum_scan", "Lattice spectrum: lowest three levels over m/J in [-3, 3]"),
    recipe!("quench_L6", "Lattice quench: flux oscillation from |g+> at m/J = 1"),
];

pub fn find(name: &str) -> Option<&'static Recipe> {
    RECIPES.iter().find(|r| r.name == name)
}
