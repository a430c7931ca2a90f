"""Tests du vérificateur de types et de permissions."""

import pytest

from core.lang import OWNED, SHARED
from core.schemas import CheckReportModel
from core.typechecker import TypeErrorKind, check_program


def kinds(program) -> list[TypeErrorKind]:
    return check_program(program).kinds()


class TestCorpus:
    """Verdicts attendus sur le corpus."""

    @pytest.mark.parametrize(
        "name",
        ["pc_fixed", "mut_cv_high", "cv_two_waits", "ceiling", "deadlock", "trylock", "broadcast"],
    )
    def test_accepted(self, corpus, name):
        """Programmes bien typés."""
        report = check_program(corpus(name))
        assert report.ok, [str(e) for e in report.errors]

    @pytest.mark.parametrize(
        "name,kind",
        [
            ("fut_terr", TypeErrorKind.SIGNAL_WITHOUT_PERMISSION),
            ("pc_terr", TypeErrorKind.SPAWN_PERMISSION_LEAK),
            ("pc_reordered", TypeErrorKind.SPAWN_PERMISSION_LEAK),
            ("mut_cv", TypeErrorKind.CRITICAL_SECTION_FAILS_AT_CEILING),
        ],
    )
    def test_rejected(self, corpus, name, kind):
        """Un seul diagnostic, du genre attendu."""
        assert kinds(corpus(name)) == [kind]

    def test_signal_span(self, corpus):
        """Le diagnostic pointe sur le signal fautif."""
        (error,) = check_program(corpus("fut_terr")).errors
        assert error.span.line == 9

    def test_leak_points_at_producer_spawn(self, corpus):
        """La fuite est signalée au spawn du producteur, pas du consommateur."""
        program = corpus("pc_terr")
        (error,) = check_program(program).errors
        line = program.text.splitlines()[error.span.line - 1]
        assert "cv@High: owned" in line

    def test_final_permissions(self, corpus):
        """Le thread principal garde la propriété du CV qu'il signale."""
        report = check_program(corpus("cv_two_waits"))
        cv = next(iter(report.perms.cvs()))
        assert report.perms.get(cv, "P") is OWNED


class TestErrorKinds:
    """Un programme minimal par genre d'erreur."""

    @pytest.mark.parametrize(
        "source,kind",
        [
            (
                "priorities Low < High; let c = newcv<Low> in spawn<High>[] { wait(c) }",
                TypeErrorKind.WAIT_PRIORITY_TOO_HIGH,
            ),
            (
                "priorities Low < High; spawn<High>[] { let c = newcv<High> in let d = promote<Low>(c) in skip }",
                TypeErrorKind.PROMOTE_NOT_UPWARD,
            ),
            (
                "priorities Low < High; let c = newcv<Low> in "
                "spawn<Low>[c@Low: shared] { let d = promote<High>(c) in skip }",
                TypeErrorKind.PROMOTE_MISSING_OWNERSHIP,
            ),
            (
                "priorities Low < High; let c = newcv<High> in skip",
                TypeErrorKind.NEWCV_ABOVE_THREAD,
            ),
            (
                "priorities Low < High; let m = newmutex<Low> in spawn<High>[] { with (m) { skip } }",
                TypeErrorKind.MUTEX_CEILING_VIOLATION,
            ),
            (
                "priorities P; let c = newcv<P> in if 1 { spawn<P>[c@P: owned] { skip } } else { skip }",
                TypeErrorKind.BRANCH_PERMISSION_MISMATCH,
            ),
            (
                "priorities P; let c = newcv<P> in while 1 { spawn<P>[c@P: owned] { skip } }",
                TypeErrorKind.LOOP_PERMISSION_NOT_INVARIANT,
            ),
            (
                "priorities P; let c = newcv<P> in spawn<P>[c@P: owned] { skip }; spawn<P>[c@P: owned] { skip }",
                TypeErrorKind.INVALID_SPLIT,
            ),
            (
                "priorities P; let r = newref<nat>(0) in let c = newcv<P> in r := c",
                TypeErrorKind.PLAIN_TYPE_MISMATCH,
            ),
            (
                "priorities P; signal(#cv:ghost@P)",
                TypeErrorKind.UNKNOWN_NAME,
            ),
        ],
    )
    def test_kind(self, parse, source, kind):
        assert kinds(parse(source)) == [kind]

    def test_if_condition_must_be_nat(self, parse):
        program = parse("priorities P; let c = newcv<P> in if c { skip } else { skip }")
        assert kinds(program) == [TypeErrorKind.PLAIN_TYPE_MISMATCH]

    def test_errors_in_source_order(self, parse):
        """Les diagnostics s'accumulent dans l'ordre du source."""
        program = parse(
            "priorities Low < High;\n"
            "let c = newcv<High> in\n"
            "let d = newcv<Low> in\n"
            "spawn<High>[] { wait(d) }"
        )
        report = check_program(program)
        assert report.kinds() == [TypeErrorKind.NEWCV_ABOVE_THREAD, TypeErrorKind.WAIT_PRIORITY_TOO_HIGH]
        assert [e.span.line for e in report.errors] == [2, 4]


class TestPermissions:
    """Tests du flux de permissions."""

    def test_newcv_bounded_by_thread_priority(self, parse):
        """Un thread ne crée pas de CV au-dessus de sa priorité."""
        report = check_program(parse("priorities Low < Med < High; let c = newcv<Med> in skip"))
        assert report.ok is False
        report = check_program(parse("priorities Low < Med < High; spawn<Med>[] { let c = newcv<Med> in skip }"))
        assert report.ok

    def test_shared_split_keeps_signal_right(self, parse):
        """Après un passage shared, le spawner peut encore signaler."""
        program = parse(
            "priorities P; let c = newcv<P> in spawn<P>[c@P: shared] { signal(c) }; signal(c)"
        )
        report = check_program(program)
        assert report.ok
        assert report.perms.get(next(iter(report.perms.cvs())), "P") is SHARED

    def test_owned_pass_removes_signal_right(self, parse):
        """Après un passage owned, le spawner ne peut plus signaler."""
        program = parse("priorities P; let c = newcv<P> in spawn<P>[c@P: owned] { skip }; signal(c)")
        assert kinds(program) == [TypeErrorKind.SIGNAL_WITHOUT_PERMISSION]

    def test_promote_revokes_lower_permissions(self, parse):
        """La promotion retire les permissions sous la nouvelle priorité."""
        program = parse("priorities Low < High; let c = newcv<Low> in let d = promote<High>(c) in signal(c)")
        assert kinds(program) == [TypeErrorKind.SIGNAL_WITHOUT_PERMISSION]

    def test_critical_section_at_own_ceiling(self, parse):
        """Une section critique au plafond du thread n'est vérifiée qu'une fois."""
        program = parse("priorities P; let m = newmutex<P> in let c = newcv<P> in with (m) { signal(c) }")
        assert check_program(program).ok


class TestCheckReportModel:
    """Tests de la sérialisation du rapport."""

    def test_from_rejected_report(self, corpus):
        model = CheckReportModel.from_report(check_program(corpus("mut_cv")), program="mut_cv.l4s")
        assert model.ok is False
        assert model.errors[0].kind == "CriticalSectionFailsAtCeiling"
        assert model.errors[0].span.line > 0

    def test_from_accepted_report(self, corpus):
        model = CheckReportModel.from_report(check_program(corpus("pc_fixed")))
        assert model.ok
        assert model.errors == []
