"""Recommendation and evaluation on top of the trained components.

A trained model scores (method, class) pairs with the probability that
the method belongs in the class.  For every scoreable method the
recommender compares its current class against every parameter-type
class and recommends the argmax when it clears the decision threshold.
Evaluation checks recommended moves against the injected ground truth,
reporting per-project precision/recall/F1 with macro and micro averages.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .codegen import list_projects, load_project
from .config import RunConfig
from .embed import (
    CodeVector,
    EmbedderParams,
    Vocabularies,
    embed_bag,
    train_embedder,
)
from .bundle import CorruptFileError, load_bundle, save_bundle
from .errors import DataError
from .featurize import (
    FeatureVector,
    NoMethodsError,
    PcaModel,
    apply_pca_matrix,
    class_embedding,
    fit_pca,
    make_pair_vector,
)
from .frontend import SourceUnit
from .injector import (
    CandidateMove,
    GroundTruthEntry,
    LabeledExample,
    build_class_index,
    build_dataset,
    find_movable,
    find_scoreable,
    inject_feature_envy,
    split_dataset,
)
from .pathctx import ContextBag, ExtractionLimits, extract_contexts
from .svm import (
    PlattParams,
    RffMap,
    SvmHyperparams,
    SvmModel,
    fit_platt,
    fit_rff,
    platt_probability,
    train_svm,
)

MOVE = "Move"
STAY = "Stay"
NO_RECOMMENDATION = "NoRecommendation"


class NoCandidatesError(DataError):
    """Corpus holds nothing the recommender could score."""


@dataclass
class Recommendation:
    method_id: str
    best_class_id: str
    probability: float
    decision: str

    def __post_init__(self):
        if self.decision not in (MOVE, STAY, NO_RECOMMENDATION):
            raise ValueError(f"bad decision {self.decision!r}")


# ---------------------------------------------------------------------------
# Corpus-level embedding


def corpus_samples(
    units: list[SourceUnit], limits: ExtractionLimits
) -> list[tuple[ContextBag, str]]:
    """(bag, method name) pairs for embedder training, in source order."""
    samples = []
    for unit in units:
        for cls in unit.classes:
            for method in cls.methods:
                samples.append((extract_contexts(method, limits), method.name))
    return samples


def embed_corpus(
    units: list[SourceUnit],
    params: EmbedderParams,
    vocabs: Vocabularies,
    limits: ExtractionLimits,
) -> dict[str, CodeVector]:
    """Vector per method id; methods with empty bags are left out."""
    out = {}
    for unit in units:
        for cls in unit.classes:
            for method in cls.methods:
                bag = extract_contexts(method, limits)
                if not bag.contexts:
                    continue
                out[method.id] = embed_bag(bag, params, vocabs)
    return out


# ---------------------------------------------------------------------------
# Trained model bundle


@dataclass(eq=False)
class ModelBundle:
    embedder: EmbedderParams
    vocabs: Vocabularies
    pca: PcaModel
    svm_model: SvmModel
    platt: PlattParams
    rff: RffMap | None
    threshold: float
    limits: ExtractionLimits

    def pair_probabilities(self, raw: np.ndarray) -> np.ndarray:
        """Probability that each raw method-class pair row belongs together."""
        reduced = apply_pca_matrix(self.pca, raw)
        mapped = self.rff.transform(reduced) if self.rff is not None else reduced
        scores = self.svm_model.decision_matrix(mapped)
        return np.array([platt_probability(self.platt, float(s)) for s in scores])


def fit_classifier(
    train: list[LabeledExample],
    validate: list[LabeledExample],
    config: RunConfig,
) -> tuple[PcaModel, RffMap | None, SvmModel, PlattParams]:
    """Reduction and decision stages: PCA and the feature map come from
    the training split alone; the probability calibration is fit on the
    validation split so it never sees the decision boundary's own data."""
    pca = fit_pca(
        [e.feature for e in train],
        variance_threshold=config.pca_variance_threshold,
        k=config.pca_k,
    )

    def transform(examples: list[LabeledExample], rff: RffMap | None):
        matrix = apply_pca_matrix(pca, np.stack([e.feature.values for e in examples]))
        if rff is not None:
            matrix = rff.transform(matrix)
        return [
            (
                FeatureVector(
                    row, e.feature.method_id, e.feature.class_id, "reduced"
                ),
                e.label,
            )
            for row, e in zip(matrix, examples)
        ]

    rff = None
    if config.rff_enabled:
        reduced = apply_pca_matrix(pca, np.stack([e.feature.values for e in train]))
        rff = fit_rff(reduced, d_out=config.rff_dim, gamma=config.rff_gamma, seed=config.seed)

    svm_model = train_svm(transform(train, rff), config.svm_hyperparams())
    platt = fit_platt(svm_model, transform(validate, rff))
    return pca, rff, svm_model, platt


def classifier_metrics(bundle: ModelBundle, examples: list[LabeledExample]) -> dict:
    """Held-out accuracy and mean negative log-likelihood."""
    if not examples:
        raise DataError("cannot score an empty example list")
    raw = np.stack([e.feature.values for e in examples])
    labels = np.array([e.label for e in examples])
    probs = bundle.pair_probabilities(raw)
    accuracy = float(np.mean((probs > 0.5).astype(int) == labels))
    nll = float(-np.mean(labels * np.log(probs) + (1 - labels) * np.log(1 - probs)))
    return {"accuracy": accuracy, "nll": nll, "count": len(examples)}


# ---------------------------------------------------------------------------
# Recommendation


def recommend(
    units: list[SourceUnit],
    embeddings: dict[str, CodeVector],
    bundle: ModelBundle,
) -> list[Recommendation]:
    """Score every structurally scoreable method against its candidate
    classes.  Decision order: a best probability at or below the
    threshold recommends nothing; otherwise the argmax class either
    confirms the current home (Stay) or names the move target (Move).
    Ties prefer the current class, then the lexicographically smallest.
    """
    candidates = find_scoreable(units)
    if not candidates:
        raise NoCandidatesError("no scoreable methods in corpus")
    index = build_class_index(units)
    out = []
    for cand in candidates:
        method_vec = embeddings.get(cand.method_id)
        if method_vec is None:
            out.append(
                Recommendation(cand.method_id, cand.origin_class_id, 0.0, NO_RECOMMENDATION)
            )
            continue
        class_ids: list[str] = []
        rows: list[np.ndarray] = []
        origin_cls = index[cand.origin_class_id][1]
        try:
            origin_mean = class_embedding(origin_cls, embeddings, exclude=cand.method_id)
            class_ids.append(cand.origin_class_id)
            rows.append(make_pair_vector(method_vec, origin_mean).values)
        except NoMethodsError:
            pass
        for target in cand.target_class_ids:
            try:
                mean = class_embedding(index[target][1], embeddings)
            except NoMethodsError:
                continue
            class_ids.append(target)
            rows.append(make_pair_vector(method_vec, mean).values)
        if not rows:
            out.append(
                Recommendation(cand.method_id, cand.origin_class_id, 0.0, NO_RECOMMENDATION)
            )
            continue
        probs = bundle.pair_probabilities(np.stack(rows))
        best_prob = float(probs.max())
        tied = [c for c, p in zip(class_ids, probs) if p == best_prob]
        if cand.origin_class_id in tied:
            best = cand.origin_class_id
        else:
            best = min(tied)
        if best_prob <= bundle.threshold:
            decision = NO_RECOMMENDATION
        elif best == cand.origin_class_id:
            decision = STAY
        else:
            decision = MOVE
        out.append(Recommendation(cand.method_id, best, best_prob, decision))
    return out


# ---------------------------------------------------------------------------
# Evaluation


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


@dataclass
class ProjectScore:
    project: str
    n_ground_truth: int
    n_recommended: int
    n_correct: int
    precision: float
    recall: float
    f1: float
    precision_undefined: bool


@dataclass
class EvalReport:
    projects: list[ProjectScore]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    micro_precision: float
    micro_recall: float
    micro_f1: float

    def to_dict(self) -> dict:
        return {
            "projects": [
                {
                    "project": p.project,
                    "ground_truth": p.n_ground_truth,
                    "recommended": p.n_recommended,
                    "correct": p.n_correct,
                    "precision": p.precision,
                    "recall": p.recall,
                    "f1": p.f1,
                    "precision_undefined": p.precision_undefined,
                }
                for p in self.projects
            ],
            "macro": {
                "precision": self.macro_precision,
                "recall": self.macro_recall,
                "f1": self.macro_f1,
            },
            "micro": {
                "precision": self.micro_precision,
                "recall": self.micro_recall,
                "f1": self.micro_f1,
            },
        }


def evaluate(
    recs_by_project: dict[str, list[Recommendation]],
    gt_by_project: dict[str, list[GroundTruthEntry]],
) -> EvalReport:
    """A recommendation counts as correct when it moves a ground-truth
    method back to the exact class it was taken from."""
    if set(recs_by_project) != set(gt_by_project):
        raise DataError(
            f"project sets differ: recommendations {sorted(recs_by_project)} "
            f"vs ground truth {sorted(gt_by_project)}"
        )
    scores = []
    total_correct = total_recommended = total_gt = 0
    for project in sorted(gt_by_project):
        entries = gt_by_project[project]
        if not entries:
            raise DataError(f"project {project} has no ground-truth entries")
        home = {e.moved_method_id: e.original_class_id for e in entries}
        moves = [r for r in recs_by_project[project] if r.decision == MOVE]
        correct = sum(1 for r in moves if home.get(r.method_id) == r.best_class_id)
        undefined = not moves
        precision = correct / len(moves) if moves else 0.0
        recall = correct / len(entries)
        scores.append(
            ProjectScore(
                project,
                len(entries),
                len(moves),
                correct,
                precision,
                recall,
                f1_score(precision, recall),
                undefined,
            )
        )
        total_correct += correct
        total_recommended += len(moves)
        total_gt += len(entries)
    n = len(scores)
    micro_precision = total_correct / total_recommended if total_recommended else 0.0
    micro_recall = total_correct / total_gt
    return EvalReport(
        scores,
        macro_precision=sum(s.precision for s in scores) / n,
        macro_recall=sum(s.recall for s in scores) / n,
        macro_f1=sum(s.f1 for s in scores) / n,
        micro_precision=micro_precision,
        micro_recall=micro_recall,
        micro_f1=f1_score(micro_precision, micro_recall),
    )


def analytic_random_baseline(
    candidates_by_project: dict[str, list[CandidateMove]],
    gt_by_project: dict[str, list[GroundTruthEntry]],
) -> float:
    """Expected macro-F1 of recommending uniformly at random.

    For a ground-truth method with t candidate targets there are t + 1
    equally likely picks (stay or one target), so it is found with
    probability 1/(t+1) and some move is recommended with probability
    t/(t+1).  Methods the random recommender cannot even see count
    against recall only, exactly as they do for the real one.
    """
    f1s = []
    for project in sorted(gt_by_project):
        entries = gt_by_project[project]
        if not entries:
            raise DataError(f"project {project} has no ground-truth entries")
        cand_map = {c.method_id: c for c in candidates_by_project.get(project, [])}
        exp_correct = 0.0
        exp_recommended = 0.0
        for entry in entries:
            cand = cand_map.get(entry.moved_method_id)
            if cand is None:
                continue
            options = len(cand.target_class_ids) + 1
            if entry.original_class_id in cand.target_class_ids:
                exp_correct += 1.0 / options
            exp_recommended += (options - 1.0) / options
        precision = exp_correct / exp_recommended if exp_recommended else 0.0
        recall = exp_correct / len(entries)
        f1s.append(f1_score(precision, recall))
    if not f1s:
        raise DataError("no projects to evaluate")
    return sum(f1s) / len(f1s)


# ---------------------------------------------------------------------------
# Bundle persistence


def _vocab_list(index: dict[str, int]) -> list[str]:
    ordered = [""] * len(index)
    for key, i in index.items():
        ordered[i] = key
    return ordered


def save_model_bundle(path: str | Path, bundle: ModelBundle) -> None:
    arrays = {f"emb_{k}": v for k, v in bundle.embedder.grouped().items()}
    arrays["pca_mean"] = bundle.pca.mean
    arrays["pca_components"] = bundle.pca.components
    arrays["pca_evr"] = bundle.pca.explained_variance_ratio
    arrays["svm_weights"] = bundle.svm_model.weights
    arrays["svm_objective"] = np.asarray(bundle.svm_model.objective_history, dtype=np.float64)
    if bundle.rff is not None:
        arrays["rff_omega"] = bundle.rff.omega
        arrays["rff_phases"] = bundle.rff.phases
    hp = bundle.svm_model.hyperparams
    meta = {
        "token_vocab": _vocab_list(bundle.vocabs.token_index),
        "path_vocab": _vocab_list(bundle.vocabs.path_index),
        "name_vocab": _vocab_list(bundle.vocabs.name_index),
        "threshold": bundle.threshold,
        "svm": {"c": hp.C, "epochs": hp.epochs, "seed": hp.seed, "bias": bundle.svm_model.bias},
        "platt": {"a": bundle.platt.A, "b": bundle.platt.B, "converged": bundle.platt.converged},
        "rff_gamma": None if bundle.rff is None else bundle.rff.gamma,
        "limits": {
            "max_length": bundle.limits.max_length,
            "max_width": bundle.limits.max_width,
            "max_contexts": bundle.limits.max_contexts,
            "seed": bundle.limits.seed,
        },
    }
    save_bundle(path, "model", meta, arrays)


def load_model_bundle(path: str | Path) -> ModelBundle:
    header, arrays = load_bundle(path, expect_kind="model")
    meta = header["meta"]
    try:
        vocabs = Vocabularies(
            {t: i for i, t in enumerate(meta["token_vocab"])},
            {p: i for i, p in enumerate(meta["path_vocab"])},
            {n: i for i, n in enumerate(meta["name_vocab"])},
        )
        embedder = EmbedderParams(
            token_matrix=arrays["emb_token_matrix"],
            path_matrix=arrays["emb_path_matrix"],
            fc_matrix=arrays["emb_fc_matrix"],
            fc_bias=arrays["emb_fc_bias"],
            attention_vector=arrays["emb_attention_vector"],
            output_matrix=arrays["emb_output_matrix"],
        )
        pca = PcaModel(arrays["pca_mean"], arrays["pca_components"], arrays["pca_evr"])
        hp = meta["svm"]
        svm_model = SvmModel(
            arrays["svm_weights"],
            float(hp["bias"]),
            SvmHyperparams(C=hp["c"], epochs=hp["epochs"], seed=hp["seed"]),
            objective_history=arrays["svm_objective"].tolist(),
        )
        platt = PlattParams(
            A=float(meta["platt"]["a"]),
            B=float(meta["platt"]["b"]),
            converged=bool(meta["platt"]["converged"]),
        )
        rff = None
        if meta["rff_gamma"] is not None:
            rff = RffMap(arrays["rff_omega"], arrays["rff_phases"], float(meta["rff_gamma"]))
        lm = meta["limits"]
        limits = ExtractionLimits(
            lm["max_length"], lm["max_width"], lm["max_contexts"], lm["seed"]
        )
        threshold = float(meta["threshold"])
    except (KeyError, ValueError) as exc:
        raise CorruptFileError(f"{path}: bad model bundle: {exc}") from exc
    return ModelBundle(embedder, vocabs, pca, svm_model, platt, rff, threshold, limits)


# ---------------------------------------------------------------------------
# Recommendation serialization

RECOMMENDATIONS_FORMAT = {"format": "recommendations", "version": 1}


def _check_header(line: str, expected: dict, path: str) -> None:
    try:
        header = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed header line: {exc}") from exc
    if header != expected:
        raise DataError(f"{path}: header {header!r} does not match {expected!r}")


def write_recommendations(
    path: str | Path, recs_by_project: dict[str, list[Recommendation]]
) -> None:
    lines = [json.dumps(RECOMMENDATIONS_FORMAT, sort_keys=True)]
    for project in sorted(recs_by_project):
        for rec in recs_by_project[project]:
            lines.append(
                json.dumps(
                    {
                        "project": project,
                        "method_id": rec.method_id,
                        "best_class_id": rec.best_class_id,
                        "probability": rec.probability,
                        "decision": rec.decision,
                    },
                    sort_keys=True,
                )
            )
    Path(path).write_text("\n".join(lines) + "\n")


def read_recommendations(path: str | Path) -> dict[str, list[Recommendation]]:
    text = Path(path).read_text().splitlines()
    if not text:
        raise DataError(f"{path}: empty recommendations file")
    _check_header(text[0], RECOMMENDATIONS_FORMAT, str(path))
    out: dict[str, list[Recommendation]] = {}
    for line in text[1:]:
        if not line:
            continue
        try:
            row = json.loads(line)
            rec = Recommendation(
                row["method_id"],
                row["best_class_id"],
                float(row["probability"]),
                row["decision"],
            )
            project = row["project"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{path}: bad recommendation row: {exc}") from exc
        out.setdefault(project, []).append(rec)
    return out


def method_project(method_id: str) -> str:
    """Project directory (group/name) a method id's file path sits in."""
    file_path = method_id.split("::", 1)[0]
    parts = Path(file_path).parts
    if len(parts) < 3:
        raise DataError(
            f"method id {method_id!r} does not sit inside a project directory"
        )
    return f"{parts[0]}/{parts[1]}"


def group_ground_truth(
    entries: list[GroundTruthEntry],
) -> dict[str, list[GroundTruthEntry]]:
    out: dict[str, list[GroundTruthEntry]] = {}
    for entry in entries:
        out.setdefault(method_project(entry.moved_method_id), []).append(entry)
    return out


# ---------------------------------------------------------------------------
# End-to-end run


@dataclass(eq=False)
class PipelineResult:
    report: EvalReport
    baseline_f1: float
    model: ModelBundle
    recommendations: dict[str, list[Recommendation]]
    ground_truth: dict[str, list[GroundTruthEntry]]
    loss_history: list[float]
    test_metrics: dict
    split_sizes: tuple[int, int, int]


def ordered_map(fn, items, jobs: int):
    """Order-preserving map, threaded when jobs > 1."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def run_pipeline(corpus_root: str | Path, config: RunConfig) -> PipelineResult:
    """Train everything on the train projects, then inject smells into
    the held-out projects and measure recovery."""
    limits = config.limits()
    train_projects, eval_projects = list_projects(corpus_root)
    if not train_projects or not eval_projects:
        raise DataError("corpus needs both train and eval projects")

    train_units = {p: load_project(corpus_root, p) for p in train_projects}

    samples = []
    for project in train_projects:
        samples.extend(corpus_samples(train_units[project], limits))
    vocabs, params, losses = train_embedder(samples, config.train_config())

    def project_examples(project: str) -> list[LabeledExample]:
        units = train_units[project]
        embeddings = embed_corpus(units, params, vocabs, limits)
        return build_dataset(units, embeddings, find_movable(units))

    examples: list[LabeledExample] = []
    for chunk in ordered_map(project_examples, train_projects, config.jobs):
        examples.extend(chunk)
    train_ex, test_ex, validate_ex = split_dataset(examples, config.seed)

    pca, rff, svm_model, platt = fit_classifier(train_ex, validate_ex, config)
    bundle = ModelBundle(
        params, vocabs, pca, svm_model, platt, rff, config.threshold, limits
    )
    test_metrics = classifier_metrics(bundle, test_ex)

    def eval_project(project: str):
        units = load_project(corpus_root, project)
        mutated, entries = inject_feature_envy(units, config.seed, config.max_moves)
        embeddings = embed_corpus(mutated, params, vocabs, limits)
        try:
            recs = recommend(mutated, embeddings, bundle)
        except NoCandidatesError:
            recs = []
        return project, recs, entries, find_scoreable(mutated)

    recs_by_project = {}
    gt_by_project = {}
    cands_by_project = {}
    for project, recs, entries, cands in ordered_map(eval_project, eval_projects, config.jobs):
        recs_by_project[project] = recs
        gt_by_project[project] = entries
        cands_by_project[project] = cands

    report = evaluate(recs_by_project, gt_by_project)
    baseline = analytic_random_baseline(cands_by_project, gt_by_project)
    return PipelineResult(
        report,
        baseline,
        bundle,
        recs_by_project,
        gt_by_project,
        losses,
        test_metrics,
        (len(train_ex), len(test_ex), len(validate_ex)),
    )
