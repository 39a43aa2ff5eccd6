from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from codescaffold.analysis import Node, ParseError, node_count, parse_program, tokenize, walk

from program_gen import random_program


def kinds(tree: Node) -> list[str]:
    return [n.kind for n in walk(tree)]


class TestBasicShapes:
    def test_single_assignment(self):
        tree = parse_program("x = 1")
        assert tree.kind == "Program"
        (assign,) = tree.children
        assert assign.kind == "Assign"
        target, value = assign.children
        assert (target.kind, target.text) == ("Name", "x")
        assert (value.kind, value.param, value.text) == ("Literal", "INT", "1")

    def test_for_accumulation(self):
        # for i in range(n): s = s + i
        tree = parse_program("for i in range(n):\n    s = s + i")
        (loop,) = tree.children
        assert loop.kind == "ForEach"
        var, iterable, body = loop.children
        assert (var.kind, var.text) == ("Name", "i")
        assert iterable.kind == "Call"
        assert iterable.children[0].text == "range"
        assert body.kind == "Assign"
        assert body.children[1].kind == "BinOp"
        assert body.children[1].param == "+"

    def test_syntax_error_position(self):
        with pytest.raises(ParseError) as excinfo:
            parse_program("x = = 1")
        assert excinfo.value.line == 1
        assert excinfo.value.column >= 1

    def test_empty_program_is_single_node(self):
        tree = parse_program("")
        assert tree.kind == "Program"
        assert node_count(tree) == 1

    def test_if_elif_else_nesting(self):
        source = (
            "if x > 0:\n"
            "    y = 1\n"
            "elif x < 0:\n"
            "    y = 2\n"
            "else:\n"
            "    y = 3\n"
        )
        (if_node,) = parse_program(source).children
        assert if_node.kind == "If"
        assert [c.kind for c in if_node.children] == ["Compare", "Assign", "Elif", "Else"]

    def test_while_with_break_continue(self):
        source = "while True:\n    if x:\n        break\n    continue\n"
        (loop,) = parse_program(source).children
        assert loop.kind == "While"
        assert loop.children[0].param == "BOOL"

    def test_function_definition_params(self):
        source = "def add(a, b):\n    return a + b\n"
        (fn,) = parse_program(source).children
        assert fn.kind == "FuncDef"
        name, p1, p2, ret = fn.children
        assert name.text == "add"
        assert (p1.text, p2.text) == ("a", "b")
        assert ret.kind == "Return"

    def test_method_call_desugars_to_call(self):
        # receiver becomes the first argument after the method name
        tree = parse_program("parts = input().split()")
        (assign,) = tree.children
        call = assign.children[1]
        assert call.kind == "Call"
        assert call.children[0].text == "split"
        assert call.children[1].kind == "Call"
        assert call.children[1].children[0].text == "input"

    def test_slice_and_index(self):
        tree = parse_program("a = s[1:3]\nb = s[0]\nc = s[::-1]\n")
        a, b, c = tree.children
        assert a.children[1].kind == "Slice"
        assert b.children[1].kind == "Index"
        assert c.children[1].kind == "Slice"

    def test_list_literal_and_aug_assign(self):
        tree = parse_program("xs = [1, 2, 3]\nxs += [4]\n")
        first, second = tree.children
        assert first.children[1].kind == "ListLit"
        assert len(first.children[1].children) == 3
        assert second.kind == "AugAssign"
        assert second.param == "+"

    def test_operator_precedence(self):
        (stmt,) = parse_program("x = 1 + 2 * 3").children
        top = stmt.children[1]
        assert top.param == "+"
        assert top.children[1].param == "*"

    def test_bool_ops_and_comparison(self):
        (stmt,) = parse_program("ok = a > 1 and b < 2 or not c").children
        top = stmt.children[1]
        assert (top.kind, top.param) == ("BinOp", "or")
        left = top.children[0]
        assert left.param == "and"
        assert top.children[1].param == "not"

    def test_comments_are_dropped(self):
        with_comment = parse_program("x = 1  # set x\n# a full line\ny = 2\n")
        without = parse_program("x = 1\ny = 2\n")
        assert kinds(with_comment) == kinds(without)

    def test_string_escapes(self):
        (stmt,) = parse_program('s = "a\\nb"').children
        assert stmt.children[1].text == "a\nb"


class TestRejections:
    @pytest.mark.parametrize("source", [
        "x = = 1",
        "if x\n    y = 1",          # missing colon
        "for in range(3):\n    pass_through = 1",
        "x.y",                       # bare attribute access
        "x = {1: 2}",                # dict literal is outside the subset
        "import os",                 # no imports
        "def f(:\n    return 1",
        "x = 1 +",
        "while True:\nx = 1",        # missing indent
        "x = 'unterminated",
        "else:\n    x = 1",
        "x = 3 ** 2",                # no power operator
    ])
    def test_out_of_subset_rejected(self, source):
        with pytest.raises(ParseError):
            parse_program(source)

    def test_tab_indentation_rejected(self):
        with pytest.raises(ParseError) as excinfo:
            parse_program("if x:\n\ty = 1")
        assert "tab" in excinfo.value.message

    def test_bad_dedent_rejected(self):
        source = "if x:\n        y = 1\n    z = 2\n"
        with pytest.raises(ParseError) as excinfo:
            parse_program(source)
        assert "indent" in excinfo.value.message.lower()


class TestLexerDetails:
    def test_blank_and_comment_lines_ignored(self):
        source = "x = 1\n\n   \n# note\ny = 2\n"
        assert len(parse_program(source).children) == 2

    def test_implicit_continuation_in_brackets(self):
        source = "xs = [1,\n      2,\n      3]\n"
        (stmt,) = parse_program(source).children
        assert len(stmt.children[1].children) == 3

    def test_float_vs_int_tokens(self):
        toks = {(t.kind, t.text) for t in tokenize("x = 1 + 2.5 + .5")}
        assert ("INT", "1") in toks
        assert ("FLOAT", "2.5") in toks
        assert ("FLOAT", ".5") in toks

    def test_positions_tracked(self):
        toks = tokenize("x = 1\ny = 2")
        y_tok = next(t for t in toks if t.text == "y")
        assert (y_tok.line, y_tok.col) == (2, 1)


class TestGeneratedPrograms:
    @given(st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=150, deadline=None)
    def test_generated_programs_parse(self, seed):
        tree = parse_program(random_program(seed))
        assert tree.kind == "Program"
        assert node_count(tree) >= 1

    @given(st.text(max_size=40))
    @settings(max_examples=150, deadline=None)
    def test_arbitrary_text_never_crashes_differently(self, text):
        # the only acceptable failure mode is a positioned ParseError
        try:
            parse_program(text)
        except ParseError as exc:
            assert exc.line >= 1
            assert exc.column >= 1
