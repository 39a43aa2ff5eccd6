from __future__ import annotations

from collections import Counter, deque

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codescaffold.analysis import (
    BUILTIN_WHITELIST,
    EmptyFingerprint,
    ROOT_MARK,
    node_count,
    normalize,
    parse_program,
    structural_fingerprint,
    structural_similarity,
    walk,
)

from program_gen import pool_mapping, random_program, rename_identifiers, small_programs


# --- independent oracle: breadth-first gram enumeration -----------------------

def naive_label(node) -> str:
    if node.kind == "Name":
        if node.text in BUILTIN_WHITELIST:
            return "Name:" + node.text
        return "Name"
    if node.param is not None:
        return node.kind + ":" + node.param
    return node.kind


def naive_gram_enumeration(tree) -> Counter:
    grams: Counter = Counter()
    queue = deque([(tree, ROOT_MARK)])
    while queue:
        node, parent_label = queue.popleft()
        label = naive_label(node)
        child_labels = [naive_label(c) for c in node.children]
        grams[(parent_label, label, tuple(child_labels[:4]))] += 1
        for child in node.children:
            queue.append((child, label))
    return grams


def schema_of(source: str):
    return normalize(parse_program(source))


class TestNormalize:
    def test_rename_invariance_by_construction(self):
        a = schema_of("total = total + x")
        b = schema_of("acc = acc + item")
        assert a == b

    def test_whitelisted_builtins_survive(self):
        schema = schema_of("print(len(s))")
        names = [n.text for n in walk(schema) if n.kind == "Name"]
        assert names == ["print", "len", "v0"]

    def test_literal_kinds_distinguish_programs(self):
        assert schema_of("y = 3.5") != schema_of("y = 2")

    def test_literal_values_are_dropped(self):
        assert schema_of("y = 2") == schema_of("y = 99")

    def test_first_occurrence_ordering(self):
        schema = schema_of("a = b\nc = a")
        names = [n.text for n in walk(schema) if n.kind == "Name"]
        # pre-order: a, b, c -> v0, v1, v0... c is the third distinct name
        assert names == ["v0", "v1", "v2", "v0"]

    def test_function_names_get_f_prefix(self):
        schema = schema_of("def helper(x):\n    return x\nprint(helper(2))")
        names = [n.text for n in walk(schema) if n.kind == "Name"]
        assert names == ["f0", "v0", "v0", "print", "f0"]

    def test_call_before_def_still_function_named(self):
        schema = schema_of("y = helper(2)\ndef helper(x):\n    return x")
        names = [n.text for n in walk(schema) if n.kind == "Name"]
        assert names[1] == "f0"

    def test_idempotent(self):
        for seed in range(25):
            tree = parse_program(random_program(seed))
            once = normalize(tree)
            assert normalize(once) == once

    def test_comments_never_reach_the_tree(self):
        assert schema_of("x = 1  # comment") == schema_of("x = 1")


class TestFingerprint:
    def test_single_node_program(self):
        grams = structural_fingerprint(schema_of(""))
        assert grams == Counter({(ROOT_MARK, "Program", ()): 1})

    def test_gram_count_equals_node_count(self):
        for seed in range(30):
            tree = schema_of(random_program(seed))
            grams = structural_fingerprint(tree)
            assert sum(grams.values()) == node_count(tree)

    def test_renamed_programs_share_fingerprints(self):
        a = structural_fingerprint(schema_of("total = total + x"))
        b = structural_fingerprint(schema_of("acc = acc + item"))
        assert a == b

    def test_added_if_changes_exactly_the_touched_grams(self):
        # hand-enumerated: p2 adds an If around the second assignment
        p1 = structural_fingerprint(schema_of("x = 1\ny = 2"))
        p2 = structural_fingerprint(schema_of("x = 1\nif x > 0:\n    y = 2"))
        lit = "Literal:INT"
        expected_p1_only = Counter({
            (ROOT_MARK, "Program", ("Assign", "Assign")): 1,
            ("Program", "Assign", ("Name", lit)): 1,
        })
        expected_p2_only = Counter({
            (ROOT_MARK, "Program", ("Assign", "If")): 1,
            ("Program", "If", ("Compare:>", "Assign")): 1,
            ("If", "Compare:>", ("Name", lit)): 1,
            ("Compare:>", "Name", ()): 1,
            ("Compare:>", lit, ()): 1,
            ("If", "Assign", ("Name", lit)): 1,
        })
        assert p1 - p2 == expected_p1_only
        assert p2 - p1 == expected_p2_only
        # shared mass 5 of union 13, from the same hand enumeration
        assert structural_similarity(p1, p2) == pytest.approx(5 / 13)

    def test_child_tuple_capped_at_four(self):
        source = "xs = [1, 2, 3, 4, 5, 6]"
        grams = structural_fingerprint(schema_of(source))
        list_gram = next(g for g in grams if g[1] == "ListLit")
        assert len(list_gram[2]) == 4


class TestStructuralSimilarity:
    def test_identical_multisets(self):
        grams = structural_fingerprint(schema_of("x = 1\nprint(x)"))
        assert structural_similarity(grams, grams) == 1.0

    def test_disjoint_multisets(self):
        a = Counter({("^", "A", ()): 1})
        b = Counter({("^", "B", ()): 1})
        assert structural_similarity(a, b) == 0.0

    def test_multiset_jaccard_counts_multiplicity(self):
        # {g1, g1, g2} vs {g1, g2, g3}: intersection 2, union 4
        g1, g2, g3 = ("^", "A", ()), ("^", "B", ()), ("^", "C", ())
        a = Counter({g1: 2, g2: 1})
        b = Counter({g1: 1, g2: 1, g3: 1})
        assert structural_similarity(a, b) == 0.5

    def test_symmetry(self):
        for seed in range(0, 40, 2):
            fa = structural_fingerprint(schema_of(random_program(seed)))
            fb = structural_fingerprint(schema_of(random_program(seed + 1)))
            assert structural_similarity(fa, fb) == structural_similarity(fb, fa)

    def test_score_one_iff_equal_multisets(self):
        for seed in range(20):
            fa = structural_fingerprint(schema_of(random_program(seed)))
            fb = structural_fingerprint(schema_of(random_program(seed + 500)))
            score = structural_similarity(fa, fb)
            assert (score == 1.0) == (fa == fb)

    def test_empty_fingerprint_rejected(self):
        grams = structural_fingerprint(schema_of("x = 1"))
        with pytest.raises(EmptyFingerprint):
            structural_similarity(Counter(), grams)

    @given(st.integers(min_value=0, max_value=5_000))
    @settings(max_examples=100, deadline=None)
    def test_bounds(self, seed):
        fa = structural_fingerprint(schema_of(random_program(seed)))
        fb = structural_fingerprint(schema_of(random_program(seed * 7 + 1)))
        assert 0.0 <= structural_similarity(fa, fb) <= 1.0


class TestOracleEquivalence:
    def test_exhaustive_on_fifty_small_trees(self):
        def count_nodes(source: str) -> int:
            return node_count(parse_program(source))

        sources = small_programs(50, max_nodes=12, node_counter=count_nodes)
        assert len(sources) == 50
        for source in sources:
            schema = schema_of(source)
            assert structural_fingerprint(schema) == naive_gram_enumeration(schema)

    @given(st.integers(min_value=0, max_value=20_000))
    @settings(max_examples=150, deadline=None)
    def test_oracle_matches_on_generated_programs(self, seed):
        schema = schema_of(random_program(seed))
        assert structural_fingerprint(schema) == naive_gram_enumeration(schema)


class TestRenameInvariance:
    def test_injective_renaming_preserves_fingerprint(self):
        mapping = pool_mapping()
        for seed in range(60):
            source = random_program(seed)
            renamed = rename_identifiers(source, mapping)
            fa = structural_fingerprint(schema_of(source))
            fb = structural_fingerprint(schema_of(renamed))
            assert structural_similarity(fa, fb) == 1.0
