import pytest

from liftlab.syntax import (
    App,
    AtomExpr,
    Cardinality,
    INF,
    Lambda,
    Let,
    Lit,
    MULTI_SHOT,
    ParseError,
    PrimApp,
    Program,
    ScopeError,
    Thunk,
    Var,
    freshen,
    parse,
    print_program,
    validate,
)


class TestParse:
    def test_annotated_lambda(self):
        p = parse("main = let f = \\{0,*} a b -> a in f 1 2")
        let = p.main
        assert isinstance(let, Let)
        name, rhs = let.group.binds[0]
        assert name == "f"
        assert isinstance(rhs, Lambda)
        assert rhs.card == MULTI_SHOT
        assert rhs.params == ("a", "b")
        assert let.body == App("f", (Lit(1), Lit(2)))

    def test_application_atoms(self):
        p = parse("main = g 5 x f")
        assert p.main == App("g", (Lit(5), Var("x"), Var("f")))

    def test_thunk_rhs(self):
        p = parse("main = let t = thunk (+# x y) in t")
        _, rhs = p.main.group.binds[0]
        assert isinstance(rhs, Thunk)
        assert rhs.body == PrimApp("+#", (Var("x"), Var("y")))

    def test_cardinality_forms(self):
        for text, card in [
            ("{0,1}", Cardinality(0, 1)),
            ("{1,1}", Cardinality(1, 1)),
            ("{1,*}", Cardinality(1, INF)),
            ("{0,0}", Cardinality(0, 0)),
        ]:
            p = parse(f"main = let f = \\{text} x -> x in f 1")
            assert p.main.group.binds[0][1].card == card

    def test_negative_literals_and_comments(self):
        p = parse("-- leading comment\nmain = -# -3 1  -- trailing\n")
        assert p.main == PrimApp("-#", (Lit(-3), Lit(1)))

    def test_top_binds_and_recursive_flag(self):
        p = parse("id x = x;\nmain = let f = \\ a -> f a in f 1")
        assert p.top_binds[0].name == "id"
        assert p.main.group.recursive
        q = parse("main = let f = \\ a -> a in f 1")
        assert not q.main.group.recursive

    def test_case_with_alts(self):
        p = parse("main = case 1 of { 0 -> 10; 1 -> 11; default z -> z }")
        assert p.main.alts == ((0, AtomExpr(Lit(10))), (1, AtomExpr(Lit(11))))
        assert p.main.default[0] == "z"

    def test_trailing_semicolon_after_main(self):
        assert parse("main = 42;") == Program((), AtomExpr(Lit(42)))

    @pytest.mark.parametrize(
        "bad",
        [
            "main = let f = 5 in f",
            "main = let f = \\{1,0} x -> x in f 1",
            "f x = x;",
            "main = 1 2",
            "main = case 1 of { default -> 2 }",
            "main = let f = \\ -> 2 in f",
        ],
    )
    def test_parse_errors_carry_position(self, bad):
        with pytest.raises(ParseError) as err:
            parse(bad)
        assert err.value.line >= 1 and err.value.col >= 1

    def test_unexpected_character(self):
        with pytest.raises(ParseError, match="2:"):
            parse("main =\n  ?")


class TestPrint:
    def test_literal_main(self):
        assert print_program(Program((), AtomExpr(Lit(42)))) == "main = 42\n"

    def test_nested_lets_golden(self):
        src = (
            "main = let a = thunk 10 in let b = \\ z -> "
            "case z of { 0 -> a; default z0 -> +# z0 a } in b 5"
        )
        expected = (
            "main =\n"
            "  let a = thunk 10\n"
            "  in\n"
            "  let b = \\ z ->\n"
            "      case z of {\n"
            "        0 -> a;\n"
            "        default z0 -> +# z0 a\n"
            "      }\n"
            "  in b 5\n"
        )
        assert print_program(parse(src)) == expected

    def test_roundtrip_hand_programs(self, hand_programs):
        for name, p in hand_programs.items():
            assert parse(print_program(p)) == p, name

    def test_roundtrip_generated(self, corpus):
        for p in corpus[:200]:
            assert parse(print_program(p)) == p

    def test_nonstandard_cardinality_survives(self):
        src = "main = let f = \\{1,1} u -> u in f 3"
        p = parse(src)
        assert parse(print_program(p)) == p
        assert "{1,1}" in print_program(p)


class TestValidate:
    def test_hand_programs_clean(self, hand_programs):
        for name, p in hand_programs.items():
            assert validate(p) == [], name

    def test_generated_corpus_clean(self, corpus):
        for p in corpus[:200]:
            assert validate(p) == []

    def test_duplicate_binder(self):
        p = parse("main = let x = thunk 1 in let x = thunk 2 in x")
        tags = [v.tag for v in validate(p)]
        assert "NonUniqueName" in tags

    def test_non_atomic_argument(self):
        bad = Program((), App("g", (App("f", (Lit(1),)),)))
        tags = [v.tag for v in validate(bad)]
        assert "NonAtomicArg" in tags

    def test_zero_param_lambda(self):
        from liftlab.syntax import BindGroup

        lam = Lambda(MULTI_SHOT, (), AtomExpr(Lit(1)))
        bad = Program(
            (), Let(BindGroup(False, (("f", lam),)), AtomExpr(Var("f")))
        )
        tags = [v.tag for v in validate(bad)]
        assert "ZeroParamLambda" in tags

    def test_unsaturated_primop(self):
        bad = Program((), PrimApp("##", (Lit(1), Lit(2))))
        assert [v.tag for v in validate(bad)] == ["UnsaturatedPrimop"]

    def test_unbound_variable(self):
        p = parse("main = g 5 x f")
        tags = {v.tag for v in validate(p)}
        assert tags == {"UnboundVariable"}


class TestFreshen:
    def test_unique_program_unchanged(self, hand_programs):
        for name, p in hand_programs.items():
            assert freshen(p) == p, name

    def test_second_binder_suffixed(self):
        p = freshen(parse("main = let x = thunk 1 in let x = thunk 2 in x"))
        outer = p.main
        inner = outer.body
        assert outer.group.binds[0][0] == "x"
        assert inner.group.binds[0][0] == "x_1"
        assert inner.body == AtomExpr(Var("x_1"))

    def test_shadowing_param_renamed_free_use_kept(self):
        src = "f y = case y of { default d -> let y = thunk (+# d 1) in y }; main = f 3"
        p = freshen(parse(src))
        body = p.top_binds[0].body
        assert body.scrutinee == AtomExpr(Var("y"))
        let = body.default[1]
        assert let.group.binds[0][0] == "y_1"
        assert validate(p) == []

    def test_idempotent(self, corpus):
        for p in corpus[:100]:
            assert freshen(p) == p

    def test_scope_error(self):
        with pytest.raises(ScopeError):
            freshen(parse("main = g 5 x f"))
