"""Tests des définitions partagées: ordre de priorités, permissions, signatures."""

import pytest

from core.errors import ErrorCode, ParseError, ResolutionError
from core.lang import (
    NAT,
    NONE,
    OWNED,
    SHARED,
    PermissionMap,
    PriorityOrder,
    RefType,
    Signature,
    derive_kept,
    prio_le,
    split_permission,
    validate_split,
)


class TestPriorityOrder:
    """Tests pour PriorityOrder."""

    def test_le_follows_declaration(self):
        """L'ordre suit la déclaration, du plus bas au plus haut."""
        order = PriorityOrder(("Low", "Med", "High"))
        assert order.le("Low", "High")
        assert order.le("Med", "Med")
        assert not order.le("High", "Med")
        assert order.lt("Low", "Med")
        assert not order.lt("Med", "Med")

    def test_lowest_and_highest(self):
        """Extrémités de l'ordre."""
        order = PriorityOrder(("Low", "High"))
        assert order.lowest == "Low"
        assert order.highest == "High"

    def test_single_priority(self):
        """Un ordre à une seule priorité est valide."""
        order = PriorityOrder(("P",))
        assert order.lowest == order.highest == "P"

    def test_unknown_priority_raises(self):
        """Un nom inconnu lève ResolutionError E103."""
        order = PriorityOrder(("Low", "High"))
        with pytest.raises(ResolutionError) as exc:
            prio_le(order, "Low", "Urgent")
        assert exc.value.code == ErrorCode.UNKNOWN_PRIORITY

    def test_empty_order_rejected(self):
        """Au moins une priorité."""
        with pytest.raises(ParseError) as exc:
            PriorityOrder(())
        assert exc.value.code == ErrorCode.INVALID_PRIORITY_ORDER

    def test_duplicate_names_rejected(self):
        """Noms distincts."""
        with pytest.raises(ParseError):
            PriorityOrder(("Low", "Low"))

    def test_at_or_above_and_between(self):
        """Intervalles utilisés par le typeur."""
        order = PriorityOrder(("Low", "Med", "High"))
        assert order.at_or_above("Med") == ("Med", "High")
        assert order.between("Low", "High") == ("Low", "Med")
        assert order.between("High", "High") == ()

    def test_str(self):
        assert str(PriorityOrder(("Low", "High"))) == "Low < High"


class TestSplitPermission:
    """Tests pour les règles de découpage."""

    def test_owned_splits(self):
        """Owned se découpe en (owned, none), (none, owned) ou (shared, shared)."""
        assert split_permission(OWNED) == {(OWNED, NONE), (NONE, OWNED), (SHARED, SHARED)}

    def test_shared_splits(self):
        assert split_permission(SHARED) == {(NONE, SHARED), (SHARED, NONE), (SHARED, SHARED)}

    def test_none_splits(self):
        """None ne produit que (none, none)."""
        assert split_permission(NONE) == {(NONE, NONE)}

    @pytest.mark.parametrize(
        "have,give,rest",
        [
            (OWNED, OWNED, NONE),
            (OWNED, SHARED, SHARED),
            (SHARED, SHARED, SHARED),
            (OWNED, NONE, OWNED),
            (SHARED, NONE, SHARED),
        ],
    )
    def test_derive_kept(self, have, give, rest):
        """Le reste choisi pour chaque entrée est un découpage valide."""
        whole = PermissionMap({("c", "Low"): have})
        passed = PermissionMap({("c", "Low"): give})
        kept = derive_kept(whole, passed)
        assert kept is not None
        assert kept.get("c", "Low") is rest
        assert validate_split(whole, kept, passed)

    @pytest.mark.parametrize("have,give", [(SHARED, OWNED), (NONE, SHARED), (NONE, OWNED)])
    def test_derive_kept_impossible(self, have, give):
        """Passer plus que ce que l'on possède est refusé."""
        whole = PermissionMap({("c", "Low"): have})
        passed = PermissionMap({("c", "Low"): give})
        assert derive_kept(whole, passed) is None

    def test_validate_split_rejects_duplication(self):
        """Owned ne peut pas rester owned des deux côtés."""
        whole = PermissionMap({("c", "P"): OWNED})
        assert not validate_split(whole, whole, whole)


class TestPermissionMap:
    """Tests pour PermissionMap."""

    def test_missing_entries_are_none(self):
        assert PermissionMap.empty().get("c", "Low") is NONE

    def test_none_entries_not_stored(self):
        """Une entrée none équivaut à une entrée absente."""
        explicit = PermissionMap({("c", "Low"): NONE})
        assert explicit == PermissionMap.empty()
        assert len(explicit) == 0

    def test_set_is_persistent(self):
        """set() retourne une nouvelle carte."""
        base = PermissionMap.empty()
        updated = base.set("c", "High", OWNED)
        assert base.get("c", "High") is NONE
        assert updated.get("c", "High") is OWNED

    def test_row_and_restrict(self):
        psi = PermissionMap({("c", "Low"): OWNED, ("c", "High"): SHARED, ("d", "Low"): OWNED})
        assert psi.row("c") == {"Low": OWNED, "High": SHARED}
        assert psi.restrict(["d"]).cvs() == {"d"}

    def test_str(self):
        psi = PermissionMap({("c", "Low"): OWNED})
        assert str(psi) == "{c@Low:owned}"
        assert str(PermissionMap.empty()) == "{}"


class TestSignature:
    """Tests pour Signature."""

    def test_with_cv_accumulates_priorities(self):
        """Une promotion ajoute une priorité de poignée."""
        sig = Signature().with_cv("c", "Low").with_cv("c", "High")
        assert sig.cv_prios("c") == {"Low", "High"}

    def test_merge_is_union(self):
        left = Signature().with_ref("r", RefType(NAT)).with_cv("c", "Low")
        right = Signature().with_mutex("m", "High").with_cv("c", "High")
        merged = left.merge(right)
        assert set(merged.refs) == {"r"}
        assert merged.mutexes == {"m": "High"}
        assert merged.cv_prios("c") == {"Low", "High"}

    def test_immutable_updates(self):
        base = Signature()
        base.with_ref("r", NAT)
        assert not base.refs
