//! Regenerates `fixtures/sexpr_corpus.txt`: forms harvested from the
//! trajectory fixtures plus seeded random forms. Run explicitly with
//! `cargo test -p dara-core --test corpus_tools -- --ignored`.

use dara_core::synth::{random_expr, random_graph, rng_for_seed, SynthOptions};
use std::path::PathBuf;

const HAND_WRITTEN: &[&str] = &[
    "m.017q1y",
    "m.04dwjbg",
    "(JOIN (R olympics.olympic_mascot.olympic_games) m.04dwjbg)",
    "(JOIN food.dish.ingredients m.06x4c)",
    "(JOIN (R dining.cuisine.dishes) m.0102k5v9)",
    "(AND (JOIN food.dish.ingredients m.06x4c) (JOIN (R dining.cuisine.dishes) m.0102k5v9))",
    "(JOIN food.type_of_dish.dishes (AND (JOIN food.dish.ingredients m.06x4c) (JOIN (R dining.cuisine.dishes) m.0102k5v9)))",
    "(JOIN people.person.place_of_birth m.03_3d)",
    "(AND people.academic (JOIN people.person.place_of_birth m.03_3d))",
    "(LT spaceflight.rocket_engine.dry_mass 980.0^^http://www.w3.org/2001/XMLSchema#float)",
    "(AND (JOIN (R spaceflight.rocket_engine_fuel.rocket_engines) m.017q1y) (LT spaceflight.rocket_engine.dry_mass 980.0^^http://www.w3.org/2001/XMLSchema#float))",
    "(JOIN (R astronomy.comet.comet_group) m.0595vt)",
    "(JOIN computer.operating_system.parent_os m.0386b)",
    "(AND cvg.computer_game_compilation (JOIN (R cvg.cvg_developer.games_developed) m.0fhpv))",
    "(COUNT (AND cvg.computer_game_compilation (JOIN (R cvg.cvg_developer.games_developed) m.0fhpv)))",
    "(AND cvg.computer_game_compilation s-exp-1.1)",
    "(COUNT s-exp-1)",
    "(JOIN (R cvg.musical_game_song_relationship.song) (JOIN (R cvg.musical_game.songs) m.0dq14))",
    "(JOIN (R base.pethealth.pet_disease_or_medical_condition.causes) m.05gj3zc)",
    "(JOIN (R base.pethealth.cause.pet_diseases_or_conditions_caused) s-exp-1)",
    "(ARGMAX spaceflight.bipropellant_rocket_engine spaceflight.rocket_engine.dry_mass)",
    "(ARGMIN spaceflight.bipropellant_rocket_engine spaceflight.rocket_engine.dry_mass)",
    "(GE spaceflight.rocket_engine.dry_mass 980.0^^http://www.w3.org/2001/XMLSchema#float)",
];

fn corpus_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/sexpr_corpus.txt")
}

#[test]
#[ignore = "writes fixtures/sexpr_corpus.txt"]
fn regenerate_corpus() {
    let mut lines: Vec<String> = HAND_WRITTEN.iter().map(|s| s.to_string()).collect();
    let mut rng = rng_for_seed(20240identity);
    for _ in 0..6 {
        let graph = random_graph(&mut rng, &SynthOptions::default());
        for _ in 0..35 {
            lines.push(random_expr(&mut rng, &graph, 4).to_string());
        }
    }
    lines.dedup();
    assert!(lines.len() >= 200);
    std::fs::write(corpus_path(), lines.join("\n") + "\n").unwrap();
}
