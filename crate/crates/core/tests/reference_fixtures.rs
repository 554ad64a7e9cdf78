//! End-to-end checks against the hand-encoded fixture recipes: the pasta
//! program with two sub-recipes, the single bake statement, and the baked
//! chicken annotation whose preheat step can run anywhere before baking.

mod common;

use std::collections::BTreeSet;

use cookir_core::annotate::{assemble_program, split_sentences, TaggedRecipe};
use cookir_core::dsl::{parse_program, print_program};
use cookir_core::graph::{
    count_linear_extensions, from_graph, linear_extensions, to_graph, FunctionDag, DEFAULT_ENUM_CAP,
};
use cookir_core::ir::{detokenize, tokenize_program, validate_program, EntityKind, SymbolTable};

#[test]
fn pasta_program_parses_validates_and_lowers() {
    let text = common::read_fixture("pasta.prog");
    let p = parse_program(&text).unwrap();
    assert!(validate_program(&p).is_valid());
    assert_eq!(p.commands.len(), 6);

    let g = to_graph(&p).unwrap();
    let fedges: BTreeSet<(usize, usize)> = g.function_edges().into_iter().collect();
    let expected: BTreeSet<(usize, usize)> = [(0, 1), (2, 3), (3, 4), (1, 5), (4, 5)]
        .into_iter()
        .collect();
    assert_eq!(fedges, expected, "two chains merging at Mix");
    assert_eq!(g.sink, 5);
    g.validate().unwrap();

    assert_eq!(print_program(&p), text.trim_end());
    assert_eq!(from_graph(&g).unwrap(), p);

    // The fixture vocabulary covers the program, so it tokenizes and comes
    // back unchanged.
    let table = SymbolTable::new(&common::small_vocab(), 16);
    let tokens = tokenize_program(&p, &table).unwrap();
    assert_eq!(detokenize(&tokens, &table).unwrap(), p);

    // The two chains interleave before Mix: C(5,2) orders of the length-2
    // chain within the five pre-sink slots.
    let dag = FunctionDag::from_program(&p);
    assert_eq!(count_linear_extensions(&dag).unwrap(), 10);
}

#[test]
fn bake_statement_roundtrips() {
    let text = common::read_fixture("bake_statement.prog");
    let p = parse_program(&text).unwrap();
    assert!(validate_program(&p).is_valid());
    assert_eq!(p.commands.len(), 1);
    let g = to_graph(&p).unwrap();
    assert!(g.function_edges().is_empty());
    assert_eq!(g.nodes.len(), 5, "function + chicken + oven + time + temp");
    assert_eq!(print_program(&p), text.trim_end());
}

#[test]
fn chicken_recipe_assembles_and_permutes() {
    let vocab = common::small_vocab();
    let recipe = TaggedRecipe::from_json_str(&common::read_fixture("chicken_tagged.json")).unwrap();

    // Already split: one action per sentence, so splitting is the identity.
    let split = split_sentences(&recipe);
    assert!(split.warnings.is_empty());
    assert_eq!(split.recipe, recipe);

    let out = assemble_program(&split.recipe, &vocab).unwrap();
    assert!(
        out.uncanonicalized.is_empty(),
        "fixture vocabulary covers every entity: {:?}",
        out.uncanonicalized
    );
    let p = &out.program;
    assert!(validate_program(p).is_valid());
    assert_eq!(
        print_program(p),
        concat!(
            "h1 = Preheat(tool=oven, temp='400 degrees F');\n",
            "h2 = Mix(oregano, salt, pepper, tool=bowl);\n",
            "h3 = Rub(h2, chicken);\n",
            "h4 = Drizzle(h3, 'olive oil');\n",
            "out = Bake(h1, h4, time='16-18 minutes');"
        )
    );
    assert_eq!(p.commands[1].output_tags[0].value, "marinade");

    // Preheat (command 0) may run at any point before Bake (command 4) and
    // nowhere after, so there are exactly four valid permutations.
    let dag = FunctionDag::from_program(p);
    let set = linear_extensions(&dag, DEFAULT_ENUM_CAP).unwrap();
    assert_eq!(set.orderings[0], vec![0, 1, 2, 3, 4]);
    assert_eq!(set.len(), 4);
    assert_eq!(set.beta(), 3);
    let preheat_positions: BTreeSet<usize> = set
        .orderings
        .iter()
        .map(|o| o.iter().position(|&c| c == 0).unwrap())
        .collect();
    assert_eq!(preheat_positions, (0..=3).collect::<BTreeSet<_>>());
    for ordering in &set.orderings {
        assert_eq!(*ordering.last().unwrap(), 4, "baking always comes last");
    }
    assert_eq!(
        common::oracle_linear_extensions(&dag).len(),
        set.len(),
        "brute force agrees"
    );

    // The printed program parses back to the same structure.
    assert_eq!(parse_program(&print_program(p)).unwrap(), *p);
}

#[test]
fn full_taxonomy_category_counts_load() {
    let vocab =
        cookir_core::ir::Vocabulary::from_json_str(&common::full_taxonomy_vocab_json()).unwrap();
    assert_eq!(vocab.count(EntityKind::Ingredient), 514);
    assert_eq!(vocab.count(EntityKind::Action), 60);
    assert_eq!(vocab.count(EntityKind::Tool), 55);
    assert_eq!(vocab.count(EntityKind::Quantity), 130);
    assert_eq!(vocab.count(EntityKind::Temperature), 60);
    assert_eq!(vocab.count(EntityKind::Time), 152);
    assert_eq!(vocab.count(EntityKind::How), 105);
    assert_eq!(vocab.count(EntityKind::Why), 112);
    assert_eq!(vocab.count(EntityKind::Output), 220);
}
