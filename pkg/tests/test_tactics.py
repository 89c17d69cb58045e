"""Tactic preselection: classifier merging, baseline ranking, best match."""

import pytest

from conftest import make_attack_snapshot, make_tactic, make_technique
from orca.errors import ClassifierError
from orca.tactics import (
    BaselineTacticClassifier,
    RemoteTacticClassifier,
    baseline_classifier,
    classify_tactics,
)
from orca.threatmodel import ThreatRecord, synthesize_summary


class FixedClassifier:
    def __init__(self, tag, tactics):
        self.tag = tag
        self._tactics = set(tactics)

    def classify(self, document):
        return {self.tag: set(self._tactics)}


class BrokenClassifier:
    tag = "broken"

    def classify(self, document):
        raise RuntimeError("model unavailable")


def doc(title="Credential theft", description="Stealing passwords and accounts."):
    return synthesize_summary(
        ThreatRecord(threat_id="T-1", title=title, description=description)
    )


@pytest.fixture()
def two_tactic_snapshot():
    return make_attack_snapshot(
        techniques=[make_technique("T0001", ["TA0001"])],
        tactics=[
            make_tactic("TA0001", "Initial Access", "Getting into the network."),
            make_tactic("TA0006", "Credential Access", "Stealing passwords and accounts."),
        ],
    )


class TestClassifyTactics:
    def test_union_deduplicates(self, two_tactic_snapshot, provider):
        result = classify_tactics(
            doc(),
            [FixedClassifier("a", {"TA0001"}), FixedClassifier("b", {"TA0001", "TA0006"})],
            two_tactic_snapshot,
            provider,
        )
        assert result.merged == {"TA0001", "TA0006"}
        assert result.per_classifier == {"a": {"TA0001"}, "b": {"TA0001", "TA0006"}}

    def test_union_with_empty_set(self, two_tactic_snapshot, provider):
        result = classify_tactics(
            doc(),
            [FixedClassifier("a", set()), FixedClassifier("b", {"TA0006"})],
            two_tactic_snapshot,
            provider,
        )
        assert result.merged == {"TA0006"}
        assert result.best == "TA0006"

    def test_tie_breaks_to_smallest_tactic_id(self, provider):
        # Identical descriptions force identical similarities.
        snapshot = make_attack_snapshot(
            techniques=[],
            tactics=[
                make_tactic("TA0006", description="Stealing passwords and accounts."),
                make_tactic("TA0001", description="Stealing passwords and accounts."),
            ],
        )
        result = classify_tactics(
            doc(),
            [FixedClassifier("a", {"TA0001", "TA0006"})],
            snapshot,
            provider,
        )
        assert result.similarities["TA0001"] == result.similarities["TA0006"]
        assert result.best == "TA0001"

    def test_best_attains_maximum(self, two_tactic_snapshot, provider):
        result = classify_tactics(
            doc(),
            [FixedClassifier("a", {"TA0001", "TA0006"})],
            two_tactic_snapshot,
            provider,
        )
        assert result.best == "TA0006"
        assert result.similarities[result.best] == max(result.similarities.values())

    def test_single_failure_omitted(self, two_tactic_snapshot, provider):
        result = classify_tactics(
            doc(),
            [BrokenClassifier(), FixedClassifier("ok", {"TA0001"})],
            two_tactic_snapshot,
            provider,
        )
        assert "broken" not in result.per_classifier
        assert result.merged == {"TA0001"}

    def test_all_failures_error(self, two_tactic_snapshot, provider):
        with pytest.raises(ClassifierError):
            classify_tactics(doc(), [BrokenClassifier()], two_tactic_snapshot, provider)

    def test_merged_invariant_under_order(self, two_tactic_snapshot, provider):
        classifiers = [
            FixedClassifier("a", {"TA0001"}),
            FixedClassifier("b", {"TA0006"}),
        ]
        forward = classify_tactics(doc(), classifiers, two_tactic_snapshot, provider)
        backward = classify_tactics(
            doc(), list(reversed(classifiers)), two_tactic_snapshot, provider
        )
        assert forward.merged == backward.merged
        assert forward.best == backward.best

    def test_adding_classifier_never_shrinks_merged(self, two_tactic_snapshot, provider):
        base = classify_tactics(
            doc(), [FixedClassifier("a", {"TA0001"})], two_tactic_snapshot, provider
        )
        extended = classify_tactics(
            doc(),
            [FixedClassifier("a", {"TA0001"}), FixedClassifier("b", {"TA0006"})],
            two_tactic_snapshot,
            provider,
        )
        assert base.merged <= extended.merged

    def test_unknown_tactic_left_out_of_similarities(self, two_tactic_snapshot, provider):
        result = classify_tactics(
            doc(),
            [FixedClassifier("a", {"TA0006", "TA9999"})],
            two_tactic_snapshot,
            provider,
        )
        assert "TA9999" in result.merged
        assert "TA9999" not in result.similarities


class TestBaselineClassifier:
    def test_top_k_equal_to_count_returns_all(self, two_tactic_snapshot, provider):
        result = baseline_classifier(doc(), two_tactic_snapshot, 2, provider)
        assert result == {"TA0001", "TA0006"}

    def test_self_match_dominates(self, two_tactic_snapshot, provider):
        document = doc(
            title="Credential Access", description="Stealing passwords and accounts."
        )
        assert baseline_classifier(document, two_tactic_snapshot, 1, provider) == {"TA0006"}

    def test_top_k_exceeding_count_rejected(self, two_tactic_snapshot, provider):
        with pytest.raises(ValueError):
            baseline_classifier(doc(), two_tactic_snapshot, 3, provider)

    def test_credential_summary_hits_credential_access(self, enterprise_snapshot, provider):
        document = synthesize_summary(
            ThreatRecord(
                threat_id="T-CRED",
                title="Credential stuffing against exposed login services",
                description=(
                    "Adversaries steal account names and passwords using brute force"
                    " and credential stuffing to authenticate against subscriber accounts."
                ),
            )
        )
        for top_k in (1, 2, 3):
            assert "TA0006" in baseline_classifier(
                document, enterprise_snapshot, top_k, provider
            )

    def test_wrapper_reports_tag(self, two_tactic_snapshot, provider):
        classifier = BaselineTacticClassifier(two_tactic_snapshot, 1, provider)
        result = classifier.classify(doc())
        assert set(result) == {"baseline-top1"}


class TestRemoteClassifier:
    def test_stub_service_sets_reported_separately(self, stub_service, provider, two_tactic_snapshot):
        classifier = RemoteTacticClassifier(stub_service)
        document = doc(
            title="Privilege abuse with stolen credentials",
            description="Credential theft and privilege escalation.",
        )
        result = classify_tactics(document, [classifier], two_tactic_snapshot, provider)
        assert result.per_classifier["stub-alpha"] == {"TA0006"}
        assert result.per_classifier["stub-beta"] == {"TA0004"}
        assert result.merged == {"TA0006", "TA0004"}

    def test_unreachable_service_raises_through_classify(self, two_tactic_snapshot, provider):
        classifier = RemoteTacticClassifier("http://127.0.0.1:1", timeout=0.2)
        with pytest.raises(ClassifierError):
            classify_tactics(doc(), [classifier], two_tactic_snapshot, provider)
