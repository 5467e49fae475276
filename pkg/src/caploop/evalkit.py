"""Evaluation kit: text normalization, word alignment, WER, the exact
Wilcoxon signed-rank test, and per-session improvement reports."""

import json
import math
import statistics
import unicodedata
from array import array
from dataclasses import dataclass, field

from caploop import kernels

_OP_NAMES = ("hit", "sub", "ins", "del")

# exact enumeration up to this many effective pairs, normal approximation above
EXACT_ENUMERATION_LIMIT = 25


def normalize(text: str) -> list[str]:
    """Lowercase, strip punctuation (Unicode category P), split on whitespace."""
    lowered = text.lower()
    stripped = "".join(c for c in lowered if not unicodedata.category(c).startswith("P"))
    return stripped.split()


@dataclass
class Alignment:
    """Minimal-cost word alignment between a reference and a hypothesis.

    ops lists (op, ref_index, hyp_index) tuples; indexes are None on the side
    an insertion/deletion does not touch.
    """

    substitutions: int
    deletions: int
    insertions: int
    hits: int
    ops: list[tuple[str, int | None, int | None]] = field(default_factory=list)

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def _intern(ref, hyp):
    ids: dict[str, int] = {}
    ref_ids = array("i", (ids.setdefault(w, len(ids)) for w in ref))
    hyp_ids = array("i", (ids.setdefault(w, len(ids)) for w in hyp))
    return ref_ids, hyp_ids


def align(ref: list[str], hyp: list[str]) -> Alignment:
    """Levenshtein-optimal alignment with unit costs.

    Backtrace ties prefer match, then substitution, then insertion, then
    deletion.
    """
    ref_ids, hyp_ids = _intern(ref, hyp)
    subs, dels, ins, hits, codes = kernels.levenshtein_ops(ref_ids, hyp_ids)
    ops: list[tuple[str, int | None, int | None]] = []
    ri = hi = 0
    for code in codes:
        if code == kernels.OP_HIT or code == kernels.OP_SUB:
            ops.append((_OP_NAMES[code], ri, hi))
            ri += 1
            hi += 1
        elif code == kernels.OP_INS:
            ops.append(("ins", None, hi))
            hi += 1
        else:
            ops.append(("del", ri, None))
            ri += 1
    return Alignment(subs, dels, ins, hits, ops)


def wer(ref: list[str], hyp: list[str]) -> float:
    """(substitutions + deletions + insertions) / len(ref); may exceed 1."""
    if not ref:
        raise ValueError("WER is undefined for an empty reference")
    return align(ref, hyp).errors / len(ref)


@dataclass
class WilcoxonResult:
    w_statistic: float  # sum of positive-difference ranks
    p_value: float  # two-sided
    n_effective: int  # pairs remaining after zero differences are dropped


def _midranks(values: list[float]) -> list[float]:
    n = len(values)
    order = sorted(range(n), key=lambda k: values[k])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and values[order[j + 1]] == values[order[i]]:
            j += 1
        mid = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = mid
        i = j + 1
    return ranks


def _exact_two_sided_p(ranks: list[float], w: float) -> float:
    # doubled ranks are exact integers even with midrank ties
    doubled = [int(round(2 * r)) for r in ranks]
    total = sum(doubled)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled:
        for s in range(total, r - 1, -1):
            counts[s] += counts[s - r]
    w2 = int(round(2 * w))
    n_ge = sum(counts[w2:])
    n_le = sum(counts[: w2 + 1])
    denom = 1 << len(ranks)
    return min(1.0, 2 * min(n_ge, n_le) / denom)


def _approx_two_sided_p(ranks: list[float], w: float) -> float:
    n = len(ranks)
    mu = n * (n + 1) / 4
    tie_term = 0.0
    seen: dict[float, int] = {}
    for r in ranks:
        seen[r] = seen.get(r, 0) + 1
    for t in seen.values():
        tie_term += t**3 - t
    sigma = math.sqrt(n * (n + 1) * (2 * n + 1) / 24 - tie_term / 48)
    if sigma == 0:
        return 1.0
    d = w - mu
    if d > 0:
        z = (d - 0.5) / sigma
    elif d < 0:
        z = (d + 0.5) / sigma
    else:
        z = 0.0
    return min(1.0, math.erfc(abs(z) / math.sqrt(2)))


def wilcoxon_signed_rank(before: list[float], after: list[float]) -> WilcoxonResult:
    """Paired Wilcoxon signed-rank test on differences before - after.

    Zero differences are discarded; tied magnitudes get midranks. W is the
    sum of ranks of positive differences. The two-sided p-value is exact
    (full enumeration over sign assignments) up to EXACT_ENUMERATION_LIMIT
    effective pairs, and a normal approximation with continuity and tie
    correction beyond that.
    """
    if len(before) != len(after):
        raise ValueError("before/after must have equal lengths")
    if not before:
        raise ValueError("need at least one pair")
    diffs = [b - a for b, a in zip(before, after) if b - a != 0]
    n = len(diffs)
    if n == 0:
        raise ValueError("all differences are zero; no effective samples")
    ranks = _midranks([abs(d) for d in diffs])
    w = sum(r for r, d in zip(ranks, diffs) if d > 0)
    if n <= EXACT_ENUMERATION_LIMIT:
        p = _exact_two_sided_p(ranks, w)
    else:
        p = _approx_two_sided_p(ranks, w)
    return WilcoxonResult(w_statistic=w, p_value=p, n_effective=n)


@dataclass
class SessionStats:
    """Per-session accounting for one participant."""

    session_index: int
    wer: float
    corrections: int = 0
    recordings: int = 0
    recorded_seconds: float = 0.0


@dataclass
class ParticipantSummary:
    participant: str
    sessions: int
    first_wer: float
    last_wer: float
    relative_reduction: float  # (first - last) / first; 0.0 when first == 0
    corrections_total: int
    recordings_total: int
    recorded_seconds_total: float


@dataclass
class ImprovementReport:
    participants: list[ParticipantSummary]
    excluded: list[tuple[str, str]]  # (participant, reason)
    median_reduction: float | None
    mean_reduction: float | None
    mean_recordings: float | None
    mean_recorded_seconds: float | None
    wilcoxon: WilcoxonResult | None
    baselines: dict[str, float]  # mean final WER per arm, incl. "adapted"

    def to_dict(self) -> dict:
        return {
            "participants": [
                {
                    "participant": p.participant,
                    "sessions": p.sessions,
                    "first_wer": p.first_wer,
                    "last_wer": p.last_wer,
                    "relative_reduction": p.relative_reduction,
                    "corrections_total": p.corrections_total,
                    "recordings_total": p.recordings_total,
                    "recorded_seconds_total": p.recorded_seconds_total,
                }
                for p in self.participants
            ],
            "excluded": [{"participant": pid, "reason": why} for pid, why in self.excluded],
            "cohort": {
                "n": len(self.participants),
                "median_reduction": self.median_reduction,
                "mean_reduction": self.mean_reduction,
                "mean_recordings": self.mean_recordings,
                "mean_recorded_seconds": self.mean_recorded_seconds,
                "wilcoxon": None
                if self.wilcoxon is None
                else {
                    "w": self.wilcoxon.w_statistic,
                    "p": self.wilcoxon.p_value,
                    "n_effective": self.wilcoxon.n_effective,
                },
            },
            "baselines": dict(self.baselines),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def to_text(self) -> str:
        lines = []
        header = f"{'participant':<14}{'sessions':>9}{'first WER':>11}{'last WER':>10}{'reduction':>11}{'recs':>6}{'seconds':>9}"
        lines.append(header)
        lines.append("-" * len(header))
        for p in self.participants:
            lines.append(
                f"{p.participant:<14}{p.sessions:>9}{p.first_wer:>11.3f}{p.last_wer:>10.3f}"
                f"{p.relative_reduction * 100:>10.1f}%{p.recordings_total:>6}{p.recorded_seconds_total:>9.1f}"
            )
        for pid, why in self.excluded:
            lines.append(f"{pid:<14} excluded: {why}")
        lines.append("")
        if self.median_reduction is not None:
            lines.append(
                f"cohort: median reduction {self.median_reduction * 100:.1f}%, "
                f"mean reduction {self.mean_reduction * 100:.1f}%"
            )
        if self.mean_recordings is not None:
            lines.append(
                f"recording burden: mean {self.mean_recordings:.1f} audio files, "
                f"mean {self.mean_recorded_seconds:.1f} seconds per participant"
            )
        if self.wilcoxon is not None:
            lines.append(
                f"wilcoxon signed-rank (first vs last): W={self.wilcoxon.w_statistic:.1f}, "
                f"p={self.wilcoxon.p_value:.6g}, n={self.wilcoxon.n_effective}"
            )
        if self.baselines:
            lines.append("final-session WER by arm:")
            for name in sorted(self.baselines):
                lines.append(f"  {name:<12} {self.baselines[name]:.4f}")
        return "\n".join(lines) + "\n"


def improvement_report(
    per_participant: dict[str, list[SessionStats]],
    baselines: dict[str, dict] | None = None,
) -> ImprovementReport:
    """Cohort improvement report: first-vs-last WER reduction per participant,
    cohort median/mean, Wilcoxon over (first, last), and baseline rows.

    baselines maps participant -> {"static": [wer...], "generic": [wer...],
    "one_round": wer}; arms missing everywhere are omitted. Participants with
    fewer than two sessions are excluded and noted.
    """
    summaries: list[ParticipantSummary] = []
    excluded: list[tuple[str, str]] = []
    firsts: list[float] = []
    lasts: list[float] = []
    for pid in sorted(per_participant):
        sessions = sorted(per_participant[pid], key=lambda s: s.session_index)
        if len(sessions) < 2:
            excluded.append((pid, "fewer than two sessions"))
            continue
        first, last = sessions[0].wer, sessions[-1].wer
        reduction = 0.0 if first == 0 else (first - last) / first
        summaries.append(
            ParticipantSummary(
                participant=pid,
                sessions=len(sessions),
                first_wer=first,
                last_wer=last,
                relative_reduction=reduction,
                corrections_total=sum(s.corrections for s in sessions),
                recordings_total=sum(s.recordings for s in sessions),
                recorded_seconds_total=sum(s.recorded_seconds for s in sessions),
            )
        )
        firsts.append(first)
        lasts.append(last)

    median_red = mean_red = mean_recs = mean_secs = None
    wilcoxon = None
    if summaries:
        reductions = [p.relative_reduction for p in summaries]
        median_red = statistics.median(reductions)
        mean_red = statistics.fmean(reductions)
        mean_recs = statistics.fmean(p.recordings_total for p in summaries)
        mean_secs = statistics.fmean(p.recorded_seconds_total for p in summaries)
        try:
            wilcoxon = wilcoxon_signed_rank(firsts, lasts)
        except ValueError:
            wilcoxon = None  # no nonzero differences

    arms: dict[str, float] = {}
    if summaries:
        arms["adapted"] = statistics.fmean(p.last_wer for p in summaries)
    if baselines:
        included = {p.participant for p in summaries}
        static_finals = [v["static"][-1] for k, v in baselines.items() if k in included and v.get("static")]
        generic_finals = [v["generic"][-1] for k, v in baselines.items() if k in included and v.get("generic")]
        one_round = [v["one_round"] for k, v in baselines.items() if k in included and "one_round" in v]
        if static_finals:
            arms["static"] = statistics.fmean(static_finals)
        if generic_finals:
            arms["generic"] = statistics.fmean(generic_finals)
        if one_round:
            arms["one_round"] = statistics.fmean(one_round)

    return ImprovementReport(
        participants=summaries,
        excluded=excluded,
        median_reduction=median_red,
        mean_reduction=mean_red,
        mean_recordings=mean_recs,
        mean_recorded_seconds=mean_secs,
        wilcoxon=wilcoxon,
        baselines=arms,
    )
