"""Pairwise LLM-as-judge tournaments with seeded position randomisation."""
import logging
import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum, IntEnum
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from config import JUDGE_MODEL, JUDGE_RETRIES, MAX_IN_FLIGHT, SEED
from annotators.client import EndpointError
from annotators.prompts import ChatRequest, ImagePart, TextPart, load_template, render, template_hash

logger = logging.getLogger(__name__)

TIE = "tie"


class Criterion(str, Enum):
    HUMAN_LIKENESS = "human_likeness"
    CLARITY = "clarity"
    VISUAL_FAITHFULNESS = "visual_faithfulness"
    COMPLETENESS = "completeness"


class Choice(IntEnum):
    """The judge's digit; 0 is read as a tie."""
    TIE = 0
    FIRST = 1
    SECOND = 2


class JudgeError(ValueError):
    pass


class UnparseableVerdict(JudgeError):
    def __init__(self, raw: str):
        super().__init__(f"expected a single digit 0, 1 or 2, got {raw!r}")
        self.raw = raw


class EmptyInput(JudgeError):
    pass


@dataclass(frozen=True)
class JudgePair:
    id: str
    desc_a: str
    desc_b: str
    source_a: str
    source_b: str
    images: Tuple[str, ...] = ()
    evidence_json: Optional[str] = None


@dataclass(frozen=True)
class JudgeTask:
    """label_assignment = (label of a, label of b), either (1, 2) or (2, 1)."""
    pair: JudgePair
    criterion: Criterion
    label_assignment: Tuple[int, int]

    def __post_init__(self):
        if tuple(self.label_assignment) not in ((1, 2), (2, 1)):
            raise JudgeError(f"bad label assignment {self.label_assignment}")
        if self.criterion is Criterion.VISUAL_FAITHFULNESS and not self.pair.images:
            raise JudgeError(f"pair {self.pair.id}: visual faithfulness needs rendered images")
        if self.criterion is Criterion.COMPLETENESS and not self.pair.evidence_json:
            raise JudgeError(f"pair {self.pair.id}: completeness needs the construction JSON")

    def description(self, label: int) -> str:
        return self.pair.desc_a if self.label_assignment[0] == label else self.pair.desc_b

    def source(self, label: int) -> str:
        return self.pair.source_a if self.label_assignment[0] == label else self.pair.source_b

    def side(self, label: int) -> str:
        return "a" if self.label_assignment[0] == label else "b"

    def to_dict(self) -> dict:
        return {
            "id": self.pair.id,
            "criterion": self.criterion.value,
            "source_a": self.pair.source_a,
            "source_b": self.pair.source_b,
            "label_a": self.label_assignment[0],
            "label_b": self.label_assignment[1],
        }


@dataclass(frozen=True)
class JudgeVerdict:
    task: JudgeTask
    raw_response: str
    parsed: Choice
    winner_side: str
    winner_source: str

    def to_dict(self) -> dict:
        out = self.task.to_dict()
        out.update({
            "raw_response": self.raw_response,
            "parsed": int(self.parsed),
            "winner_side": self.winner_side,
            "winner_source": self.winner_source,
        })
        return out


@dataclass
class JudgeSummary:
    criterion: str
    count: int
    wins_a: int
    wins_b: int
    ties: int
    win_rate_a: float
    win_rate_b: float
    tie_rate: float
    dropped: int = 0
    wins_by_source: Dict[str, int] = field(default_factory=dict)
    tie_assumption: str = "digit 0 is a tie"

    def to_dict(self) -> dict:
        return asdict(self)


def build_tournament(pairs: Sequence[JudgePair], criterion: Criterion, seed: int = SEED) -> List[JudgeTask]:
    """Every label assignment is drawn up front from one seeded generator."""
    rng = random.Random(seed)
    criterion = Criterion(criterion)
    return [
        JudgeTask(pair, criterion, (1, 2) if rng.random() < 0.5 else (2, 1))
        for pair in pairs
    ]


def build_judge_request(
    task: JudgeTask,
    model_id: str = JUDGE_MODEL,
    temperature: float = 0.0,
    max_tokens: int = 8,
) -> ChatRequest:
    name = f"judge_{task.criterion.value}"
    prompt = render(
        load_template(name),
        description_1=task.description(1).strip(),
        description_2=task.description(2).strip(),
        evidence=(task.pair.evidence_json or "").strip(),
    ).strip()
    parts = [TextPart(prompt)]
    if task.criterion is Criterion.VISUAL_FAITHFULNESS:
        parts.extend(ImagePart(path=str(p)) for p in task.pair.images)
    return ChatRequest(
        system=load_template("judge_system").strip(),
        user_parts=tuple(parts),
        model_id=model_id,
        temperature=temperature,
        max_tokens=max_tokens,
        templates={"judge_system": template_hash("judge_system"), name: template_hash(name)},
    )


def parse_judge_response(text: str, task: JudgeTask) -> JudgeVerdict:
    """Strict: after stripping whitespace the answer must be exactly 0, 1 or 2."""
    stripped = (text or "").strip()
    if stripped not in ("0", "1", "2"):
        raise UnparseableVerdict(text)
    choice = Choice(int(stripped))
    if choice is Choice.TIE:
        return JudgeVerdict(task, text, choice, TIE, TIE)
    return JudgeVerdict(task, text, choice, task.side(int(choice)), task.source(int(choice)))


def judge_one(
    task: JudgeTask,
    call: Callable[[ChatRequest], str],
    retries: int = JUDGE_RETRIES,
    model_id: str = JUDGE_MODEL,
) -> Optional[JudgeVerdict]:
    """Retry unparseable answers up to `retries` times, then drop (None)."""
    req = build_judge_request(task, model_id)
    for attempt in range(retries + 1):
        try:
            return parse_judge_response(call(req), task)
        except UnparseableVerdict as e:
            logger.warning(f"Pair {task.pair.id} ({task.criterion.value}) attempt {attempt + 1}: {e}")
        except EndpointError as e:
            logger.error(f"Pair {task.pair.id} ({task.criterion.value}) endpoint failure: {e}")
            return None
    logger.warning(f"Dropping pair {task.pair.id} ({task.criterion.value}) after {retries + 1} attempts")
    return None


def run_tournament(
    tasks: Sequence[JudgeTask],
    call: Callable[[ChatRequest], str],
    retries: int = JUDGE_RETRIES,
    max_in_flight: int = MAX_IN_FLIGHT,
    model_id: str = JUDGE_MODEL,
) -> Tuple[List[JudgeVerdict], int]:
    """Judge every task with at most max_in_flight concurrent calls; returns (verdicts, dropped)."""
    with ThreadPoolExecutor(max_workers=max(1, max_in_flight)) as pool:
        results = list(pool.map(lambda t: judge_one(t, call, retries, model_id), tasks))
    verdicts = [v for v in results if v is not None]
    dropped = len(results) - len(verdicts)
    logger.info(f"Judged {len(verdicts)} of {len(results)} pairs ({dropped} dropped)")
    return verdicts, dropped


def aggregate_verdicts(verdicts: Sequence[JudgeVerdict], criterion: Criterion, dropped: int = 0) -> JudgeSummary:
    """Win rates by side (a/b of each pair) and win counts by source corpus."""
    criterion = Criterion(criterion)
    if not verdicts:
        raise EmptyInput("no verdicts to aggregate")
    if any(v.task.criterion is not criterion for v in verdicts):
        raise JudgeError(f"verdicts mix criteria; expected only {criterion.value}")

    n = len(verdicts)
    wins_a = sum(v.winner_side == "a" for v in verdicts)
    wins_b = sum(v.winner_side == "b" for v in verdicts)
    ties = n - wins_a - wins_b
    by_source: Dict[str, int] = {}
    for v in verdicts:
        if v.winner_source != TIE:
            by_source[v.winner_source] = by_source.get(v.winner_source, 0) + 1
    return JudgeSummary(
        criterion=criterion.value,
        count=n,
        wins_a=wins_a,
        wins_b=wins_b,
        ties=ties,
        win_rate_a=wins_a / n,
        win_rate_b=wins_b / n,
        tie_rate=ties / n,
        dropped=dropped,
        wins_by_source=dict(sorted(by_source.items())),
    )
