"""Dataset assembly: instance files, traced SFT datasets, shuffled
variants, correctness splits, and corpus statistics.

Files are JSON lines, UTF-8, one object per line, every line newline
terminated, with a fixed field order, so byte-identical reruns are the
norm rather than an accident. Each dataset file gets a sibling
``<name>.manifest.json`` recording what produced it and the SHA-256 of its
bytes. Record building is embarrassingly parallel: every record depends
only on (master seed, instance id), so worker count cannot change output.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional

from . import arc1d, countdown, sudoku, xtasks
from .core import (
    ProblemInstance,
    SftRecord,
    TaskKind,
    derive_seed,
    render_sft_record,
)
from .reward import RewardConfig, score

SCHEMA_VERSION = 1

# marker phrase counted when a completion arrives without its trace
_MARKER_PHRASE = "Wait, this doesn't lead to the correct solution."

TRACED_TASKS = (TaskKind.COUNTDOWN, TaskKind.SUDOKU, TaskKind.ARC1D)

_TRACED_BUILDERS = {
    TaskKind.COUNTDOWN: countdown.build_traced,
    TaskKind.SUDOKU: sudoku.build_traced,
    TaskKind.ARC1D: arc1d.build_traced,
}

_INSTANCE_BUILDERS = {
    TaskKind.COUNTDOWN: countdown.build_instance,
    TaskKind.SUDOKU: sudoku.build_instance,
    TaskKind.ARC1D: arc1d.build_instance,
    TaskKind.GEOMETRY_ANGLE: xtasks.build_angle_instance,
    TaskKind.GEOMETRY_ORTHOCENTER: xtasks.build_orthocenter_instance,
    TaskKind.GEOMETRY_INCIRCLE: xtasks.build_incircle_instance,
    TaskKind.COLOR_CUBE: xtasks.build_cube_instance,
    TaskKind.SELF_REFERENCE: xtasks.build_selfref_instance,
}

PROMPT_TEMPLATES = {
    TaskKind.COUNTDOWN: countdown.PROMPT_TEMPLATE,
    TaskKind.SUDOKU: sudoku.PROMPT_TEMPLATE,
    TaskKind.ARC1D: arc1d.PROMPT_HEADER,
    TaskKind.GEOMETRY_ANGLE: xtasks.ANGLE_PROMPT,
    TaskKind.GEOMETRY_ORTHOCENTER: xtasks.ORTHOCENTER_PROMPT,
    TaskKind.GEOMETRY_INCIRCLE: xtasks.INCIRCLE_PROMPT,
    TaskKind.COLOR_CUBE: xtasks.CUBE_PROMPT,
    TaskKind.SELF_REFERENCE: xtasks.SELFREF_PROMPT,
}


@dataclass(frozen=True)
class DatasetManifest:
    """Provenance for one emitted file; enough to regenerate it exactly."""

    schema_version: int
    task: str
    count: int
    backtracks: Optional[int]
    master_seed: int
    sha256: str
    prompt_template: Optional[str]

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema_version": self.schema_version,
                "task": self.task,
                "count": self.count,
                "backtracks": self.backtracks,
                "master_seed": f"{self.master_seed:016x}",
                "sha256": self.sha256,
                "prompt_template": self.prompt_template,
            },
            ensure_ascii=False,
            indent=2,
        ) + "\n"


def manifest_path_for(data_path) -> str:
    return f"{data_path}.manifest.json"


def _write_lines(path, lines) -> str:
    """Write newline-terminated lines as UTF-8, returning the SHA-256."""
    blob = "".join(line + "\n" for line in lines).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(blob)
    return hashlib.sha256(blob).hexdigest()


def _write_manifest(data_path, manifest: DatasetManifest) -> None:
    with open(manifest_path_for(data_path), "w", encoding="utf-8") as fh:
        fh.write(manifest.to_json())


# --- record serialization ----------------------------------------------------

def record_to_json(rec: SftRecord) -> str:
    return json.dumps(
        {
            "instance_id": rec.instance_id,
            "task": rec.task.value,
            "prompt": rec.prompt,
            "completion": rec.completion,
            "backtracks": rec.backtracks,
            "seed": f"{rec.seed:016x}",
            "correctness_label": rec.correctness_label,
        },
        ensure_ascii=False,
    )


def record_from_json(line: str) -> SftRecord:
    obj = json.loads(line)
    return SftRecord(
        instance_id=int(obj["instance_id"]),
        task=TaskKind(obj["task"]),
        prompt=obj["prompt"],
        completion=obj["completion"],
        backtracks=int(obj["backtracks"]),
        seed=int(obj["seed"], 16),
        correctness_label=obj.get("correctness_label"),
    )


def load_records(path) -> list:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(record_from_json(line))
    return records


def write_records(records, path) -> str:
    return _write_lines(path, [record_to_json(r) for r in records])


def instance_to_json(instance: ProblemInstance) -> str:
    return json.dumps(
        {
            "id": instance.id,
            "task": instance.task.value,
            "prompt": instance.prompt,
            "ground_truth": instance.ground_truth,
            "seed": f"{instance.seed:016x}",
            "meta": instance.meta,
        },
        ensure_ascii=False,
    )


def instance_from_json(line: str) -> ProblemInstance:
    obj = json.loads(line)
    return ProblemInstance(
        id=int(obj["id"]),
        task=TaskKind(obj["task"]),
        prompt=obj["prompt"],
        ground_truth=obj["ground_truth"],
        seed=int(obj["seed"], 16),
        meta=obj.get("meta", {}),
    )


def load_instances(path) -> list:
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                instances.append(instance_from_json(line))
    return instances


def write_instances(instances, path) -> str:
    return _write_lines(path, [instance_to_json(i) for i in instances])


# --- building ----------------------------------------------------------------

def build_instances(task: TaskKind, count: int, master_seed: int,
                    config=None) -> list:
    """Instances for any generator-backed task, ids 0..count-1."""
    builder = _INSTANCE_BUILDERS.get(task)
    if builder is None:
        raise ValueError(f"task {task.value} has no generator (verifier only)")
    if count < 1:
        raise ValueError("count must be positive")
    out = []
    for i in range(count):
        seed = derive_seed(master_seed, i)
        if config is None:
            out.append(builder(i, seed))
        else:
            out.append(builder(i, seed, config))
    return out


def build_record(task: TaskKind, instance_id: int, master_seed: int, k: int,
                 config=None) -> SftRecord:
    """One traced SFT record, fully determined by (master seed, id, k)."""
    builder = _TRACED_BUILDERS.get(task)
    if builder is None:
        raise ValueError(f"task {task.value} does not support traces")
    seed = derive_seed(master_seed, instance_id)
    if config is None:
        instance, trace = builder(instance_id, seed, k)
    else:
        instance, trace = builder(instance_id, seed, k, config)
    return render_sft_record(instance, trace)


def _record_chunk(task_value, ids, master_seed, k, config):
    task = TaskKind(task_value)
    return [(i, record_to_json(build_record(task, i, master_seed, k, config)))
            for i in ids]


def build_records(task: TaskKind, count: int, master_seed: int, k: int,
                  workers: int = 1, config=None) -> list:
    """JSON lines for ``count`` records, id order, any worker count."""
    if task not in _TRACED_BUILDERS:
        raise ValueError(f"task {task.value} does not support traces")
    if count < 1:
        raise ValueError("count must be positive")
    if k < 0:
        raise ValueError("backtrack count must be >= 0")
    if workers <= 1:
        return [record_to_json(build_record(task, i, master_seed, k, config))
                for i in range(count)]
    chunk = max(1, -(-count // (workers * 4)))
    pieces = [list(range(lo, min(lo + chunk, count)))
              for lo in range(0, count, chunk)]
    results = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_record_chunk, task.value, ids, master_seed,
                               k, config)
                   for ids in pieces]
        for fut in futures:
            results.extend(fut.result())
    results.sort(key=lambda pair: pair[0])
    return [line for _, line in results]


def emit_sft(task: TaskKind, count: int, k: int, master_seed: int, out_path,
             workers: int = 1, config=None) -> DatasetManifest:
    """Write a traced dataset plus its manifest; returns the manifest."""
    lines = build_records(task, count, master_seed, k, workers, config)
    digest = _write_lines(out_path, lines)
    manifest = DatasetManifest(
        schema_version=SCHEMA_VERSION,
        task=task.value,
        count=count,
        backtracks=k,
        master_seed=master_seed,
        sha256=digest,
        prompt_template=PROMPT_TEMPLATES.get(task),
    )
    _write_manifest(out_path, manifest)
    return manifest


def emit_instances(task: TaskKind, count: int, master_seed: int, out_path,
                   config=None) -> DatasetManifest:
    instances = build_instances(task, count, master_seed, config)
    digest = _write_lines(out_path, [instance_to_json(i) for i in instances])
    manifest = DatasetManifest(
        schema_version=SCHEMA_VERSION,
        task=task.value,
        count=count,
        backtracks=None,
        master_seed=master_seed,
        sha256=digest,
        prompt_template=PROMPT_TEMPLATES.get(task),
    )
    _write_manifest(out_path, manifest)
    return manifest


# --- shuffling ---------------------------------------------------------------

def emit_shuffled(records, rng) -> list:
    """Reassign completions so no record keeps its own.

    Uses a single random n-cycle (Sattolo's algorithm), which is a
    derangement by construction. The ``backtracks`` count travels with the
    completion it describes; stale correctness labels are cleared.
    """
    n = len(records)
    if n < 2:
        raise ValueError("need at least two records to shuffle completions")
    source = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.randrange(i)
        source[i], source[j] = source[j], source[i]
    out = []
    for m, rec in enumerate(records):
        donor = records[source[m]]
        out.append(SftRecord(
            instance_id=rec.instance_id,
            task=rec.task,
            prompt=rec.prompt,
            completion=donor.completion,
            backtracks=donor.backtracks,
            seed=rec.seed,
            correctness_label=None,
        ))
    return out


# --- scoring-driven splits ---------------------------------------------------

def count_markers(completion: str) -> int:
    return completion.count(_MARKER_PHRASE)


def split_by_correctness(instances, completions,
                         config: Optional[RewardConfig] = None) -> dict:
    """Bucket completions by reward category.

    ``instances`` is a list of ProblemInstance; ``completions`` a list of
    {"instance_id", "completion"} mappings. Every bucket key is always
    present, possibly empty. Unknown instance ids raise ValueError.
    """
    by_id = {inst.id: inst for inst in instances}
    buckets = {"correct": [], "incorrect": [], "incorrect_format": []}
    for item in completions:
        iid = int(item["instance_id"])
        inst = by_id.get(iid)
        if inst is None:
            raise ValueError(f"completion references unknown instance {iid}")
        completion = item["completion"]
        breakdown = score(inst, completion, config)
        buckets[breakdown.category].append(SftRecord(
            instance_id=inst.id,
            task=inst.task,
            prompt=inst.prompt,
            completion=completion,
            backtracks=count_markers(completion),
            seed=inst.seed,
            correctness_label=breakdown.category,
        ))
    return buckets


# --- statistics --------------------------------------------------------------

def stats(records) -> dict:
    """Corpus summary: length distributions, backtracks, task mix."""
    if not records:
        raise ValueError("no records to summarize")
    chars = [len(r.completion) for r in records]
    tokens = [len(r.completion.split()) for r in records]
    histogram: dict = {}
    per_task: dict = {}
    for r in records:
        histogram[r.backtracks] = histogram.get(r.backtracks, 0) + 1
        per_task[r.task.value] = per_task.get(r.task.value, 0) + 1

    def summary(values):
        return {
            "min": min(values),
            "max": max(values),
            "mean": round(sum(values) / len(values), 2),
        }

    return {
        "records": len(records),
        "completion_chars": summary(chars),
        "completion_tokens": summary(tokens),
        "backtracks": {str(key): histogram[key] for key in sorted(histogram)},
        "per_task": {key: per_task[key] for key in sorted(per_task)},
    }
