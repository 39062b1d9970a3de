"""Break-prediction metrics and chi-squared analysis of ABX preference counts."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

from phrasebreak.errors import EmptyInputError
from phrasebreak.textproc import B

# Chi-squared critical values at the 1% significance level. Hard-coded for the
# only two degrees of freedom this analysis can produce.
CRITICAL_1PCT = {1: 6.635, 2: 9.210}

THREE_WAY_UNIFORM = "three_way_uniform"
TWO_WAY_EXCL_NONE = "two_way_excl_none"
CHI_SQUARED_VARIANTS = (THREE_WAY_UNIFORM, TWO_WAY_EXCL_NONE)


@dataclass
class ConfusionCounts:
    """Boundary-level confusion counts with B as the positive class.

    The final boundary of every utterance is excluded from these counts: it is
    a break by convention and carries no information.
    """

    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    @property
    def scored(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


@dataclass
class ScoreReport:
    counts: ConfusionCounts
    precision: float
    recall: float
    f1_break: float
    f1_micro: float


def score_predictions(ref, hyp) -> ScoreReport:
    """Score hypothesis label sequences against references.

    `ref` and `hyp` are parallel lists of LabeledSequence. Precision, recall,
    and f1_break treat B as the positive class; f1_micro is plain accuracy
    over the scored boundaries. Utterance-final boundaries are skipped.
    """
    if len(ref) != len(hyp):
        raise ValueError(f"{len(ref)} reference sequences but {len(hyp)} hypotheses")
    counts = ConfusionCounts()
    for index, (r, h) in enumerate(zip(ref, hyp)):
        if len(r.labels) != len(h.labels):
            seq_id = r.id or f"#{index}"
            raise ValueError(
                f"sequence {seq_id}: reference has {len(r.labels)} labels, hypothesis {len(h.labels)}"
            )
        for r_label, h_label in zip(r.labels[:-1], h.labels[:-1]):
            if r_label == B and h_label == B:
                counts.tp += 1
            elif r_label != B and h_label == B:
                counts.fp += 1
            elif r_label == B and h_label != B:
                counts.fn += 1
            else:
                counts.tn += 1
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1_break = (
        2 * precision * recall / (precision + recall) if precision + recall else 0.0
    )
    f1_micro = (counts.tp + counts.tn) / counts.scored if counts.scored else 0.0
    return ScoreReport(counts, precision, recall, f1_break, f1_micro)


@dataclass
class AbxComparison:
    """Preference counts for one pairwise listening comparison."""

    name_a: str
    name_b: str
    count_a: int
    count_b: int
    count_none: int

    def __post_init__(self):
        if min(self.count_a, self.count_b, self.count_none) < 0:
            raise ValueError("preference counts must be non-negative")
        if self.total == 0:
            raise ValueError(f"comparison {self.name_a} vs {self.name_b} has no responses")

    @property
    def total(self) -> int:
        return self.count_a + self.count_b + self.count_none


@dataclass
class ChiSquaredResult:
    statistic: float
    df: int
    critical_value_at_1pct: float
    significant: bool
    variant: str


def chi_squared(comparison: AbxComparison, variant: str = THREE_WAY_UNIFORM) -> ChiSquaredResult:
    """Chi-squared goodness-of-fit test on one comparison's preference counts.

    three_way_uniform tests (A, B, none) against a uniform split (df=2);
    two_way_excl_none drops the no-preference responses and tests A vs B
    against a 50/50 split (df=1). Significance is judged at the 1% level.
    """
    if variant == THREE_WAY_UNIFORM:
        observed = [comparison.count_a, comparison.count_b, comparison.count_none]
        expected = comparison.total / 3
        df = 2
    elif variant == TWO_WAY_EXCL_NONE:
        observed = [comparison.count_a, comparison.count_b]
        if comparison.count_a + comparison.count_b == 0:
            raise ValueError(
                f"comparison {comparison.name_a} vs {comparison.name_b}: "
                "no A/B responses, cannot run two-way test"
            )
        expected = (comparison.count_a + comparison.count_b) / 2
        df = 1
    else:
        raise ValueError(f"unknown chi-squared variant {variant!r}")
    if expected == 0:
        raise ValueError("zero expected count")
    statistic = sum((o - expected) ** 2 / expected for o in observed)
    critical = CRITICAL_1PCT[df]
    return ChiSquaredResult(
        statistic=statistic,
        df=df,
        critical_value_at_1pct=critical,
        significant=statistic > critical,
        variant=variant,
    )


def emit_report(metrics: ScoreReport | None, comparisons: list[AbxComparison],
                json_path=None) -> tuple[dict, str]:
    """Build the evaluation report: a JSON document plus a printable table.

    Every comparison is analyzed under both chi-squared variants. Returns
    (report_dict, table_text) and writes the JSON when a path is given.
    """
    if metrics is None and not comparisons:
        raise EmptyInputError("nothing to report: no metrics and no comparisons")
    report: dict = {}
    if metrics is not None:
        report["f1"] = {
            "precision": metrics.precision,
            "recall": metrics.recall,
            "f1_break": metrics.f1_break,
            "f1_micro": metrics.f1_micro,
            "tp": metrics.counts.tp,
            "fp": metrics.counts.fp,
            "fn": metrics.counts.fn,
            "tn": metrics.counts.tn,
        }
    report["abx"] = []
    for comparison in comparisons:
        entry = {
            "name_a": comparison.name_a,
            "name_b": comparison.name_b,
            "counts": {
                "a": comparison.count_a,
                "b": comparison.count_b,
                "none": comparison.count_none,
            },
            "variants": [
                asdict(chi_squared(comparison, variant))
                for variant in CHI_SQUARED_VARIANTS
            ],
        }
        report["abx"].append(entry)
    text = format_report(report)
    if json_path is not None:
        with open(json_path, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return report, text


def format_report(report: dict) -> str:
    lines = []
    if "f1" in report:
        f1 = report["f1"]
        lines.append("Break prediction")
        lines.append(f"  {'precision':<12} {f1['precision']:.4f}")
        lines.append(f"  {'recall':<12} {f1['recall']:.4f}")
        lines.append(f"  {'f1_break':<12} {f1['f1_break']:.4f}")
        lines.append(f"  {'f1_micro':<12} {f1['f1_micro']:.4f}")
    if report.get("abx"):
        lines.append("ABX preferences")
        header = f"  {'Model A':<16} {'Model B':<16} {'Pref A':>7} {'Pref B':>7} {'None':>6}  significance"
        lines.append(header)
        for entry in report["abx"]:
            marks = []
            for variant in entry["variants"]:
                flag = "***" if variant["significant"] else "n.s."
                marks.append(
                    f"{variant['variant']}: chi2={variant['statistic']:.3f} {flag}"
                )
            lines.append(
                f"  {entry['name_a']:<16} {entry['name_b']:<16} "
                f"{entry['counts']['a']:>7} {entry['counts']['b']:>7} {entry['counts']['none']:>6}  "
                + "; ".join(marks)
            )
    return "\n".join(lines)
