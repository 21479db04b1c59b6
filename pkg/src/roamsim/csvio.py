"""CSV and manifest writers. Schemas are fixed and versioned; floats are
written with shortest round-trip formatting so identical runs produce
byte-identical files."""

from __future__ import annotations

import json
from typing import Iterable

from .engine import MetricsSink

SCHEMA_VERSION = 1

HANDOFFS_HEADER = ("time_s,sta,policy,branch,ap,channel,"
                   "t_cs_s,t_ro_s,t_cont_s,t_total_s,retries,infeasible")
RATES_HEADER = "time_s,sta,policy,ap,channel,rate_mbps"
LOAD_HEADER = "time_s,channel,contenders"
SUMMARY_HEADER = ("policy,stas,band,handoffs,assoc_delay_max_s,assoc_delay_min_s,"
                  "assoc_delay_avg_s,t_total_avg_s,max_contenders,avg_rate_mbps,"
                  "roam_failures")


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: str, header: str, rows: Iterable[tuple]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header + "\r\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\r\n")


def write_handoffs(path: str, sink: MetricsSink) -> None:
    _write_csv(path, HANDOFFS_HEADER, (
        (r.timestamp_s, r.sta_id, r.policy, r.branch, r.ap_id, r.channel,
         r.t_cs_s, r.t_ro_s, r.t_cont_s, r.t_total_s, r.retries, r.infeasible)
        for r in sink.records
    ))


def write_rates(path: str, sink: MetricsSink) -> None:
    _write_csv(path, RATES_HEADER, (
        (s.time_s, s.sta_id, sink.policy, s.ap_id, s.channel, s.rate_bps / 1e6)
        for s in sink.rates
    ))


def write_channel_load(path: str, sink: MetricsSink) -> None:
    _write_csv(path, LOAD_HEADER, (
        (s.time_s, s.channel, s.contenders) for s in sink.loads
    ))


def write_summary(path: str, rows: Iterable[tuple]) -> None:
    _write_csv(path, SUMMARY_HEADER, rows)


def write_manifest(path: str, manifest: dict) -> None:
    manifest = dict(manifest)
    manifest["schema_version"] = SCHEMA_VERSION
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_manifest(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
