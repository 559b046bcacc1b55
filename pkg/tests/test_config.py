"""Config parsing: canonical form, hashing, validation, sweep derivation."""

import json

import pytest

from agesched import (
    canonical_json,
    config_hash,
    parse_experiment,
    parse_sweep,
    point_experiment,
)
from agesched.config import validate_experiment, validate_sweep


BASE_DOC = {
    "network": {
        "links": 4,
        "weights": 1.0,
        "interference": {"kofn": 2},
        "channel": {"good": 0.9, "bad": 0.1, "theta": 0.25},
    },
    "policies": [
        {"kind": "stationary"},
        {"kind": "virtual-queue", "V": 1.0},
        {"kind": "age", "beta": 1.0},
        {"kind": "round-robin"},
    ],
    "horizon": 2000,
    "seeds": [1, 2],
}


def test_parse_round_trip_is_stable():
    cfg = parse_experiment(BASE_DOC)
    again = parse_experiment(json.loads(canonical_json(cfg.canonical)))
    assert cfg.hash == again.hash
    assert cfg.canonical == again.canonical
    assert len(cfg.hash) == 12
    assert all(c in "0123456789abcdef" for c in cfg.hash)


def test_canonical_hash_is_frozen():
    # guards against silent canonicalization changes breaking addressability
    assert parse_experiment(BASE_DOC).hash == "20a5d9a2f42a"


def test_canonical_form_fills_defaults():
    canon = parse_experiment(BASE_DOC).canonical
    assert canon["trace_level"] == "none"
    assert canon["checkpoints"] == []
    assert canon["network"]["channel"]["assignment"] == "prefix"
    cfg_default_seeds = parse_experiment({k: v for k, v in BASE_DOC.items() if k != "seeds"})
    assert cfg_default_seeds.seeds == tuple(range(1, 11))


def test_key_order_does_not_change_hash():
    shuffled = {
        "seeds": [1, 2],
        "horizon": 2000,
        "policies": list(BASE_DOC["policies"]),
        "network": {
            "channel": {"theta": 0.25, "bad": 0.1, "good": 0.9},
            "interference": {"kofn": 2},
            "weights": 1.0,
            "links": 4,
        },
    }
    assert parse_experiment(shuffled).hash == parse_experiment(BASE_DOC).hash


def test_hash_tracks_content():
    base = parse_experiment(BASE_DOC).hash
    assert parse_experiment({**BASE_DOC, "horizon": 2001}).hash != base
    assert parse_experiment({**BASE_DOC, "seeds": [1, 3]}).hash != base
    deep = json.loads(json.dumps(BASE_DOC))
    deep["network"]["channel"]["theta"] = 0.5
    assert parse_experiment(deep).hash != base
    assert config_hash(BASE_DOC) != config_hash({**BASE_DOC, "horizon": 2001})


def test_parsed_fields():
    cfg = parse_experiment(BASE_DOC)
    assert cfg.horizon == 2000
    assert cfg.seeds == (1, 2)
    assert cfg.spec.link_count == 4
    assert list(cfg.spec.success_probs) == [0.1, 0.9, 0.9, 0.9]
    assert [kind for kind, _ in cfg.policies] == [
        "stationary", "virtual-queue", "age", "round-robin",
    ]


def test_validation_reports_field_paths():
    errors = validate_experiment(
        {
            "network": {
                "links": 0,
                "interference": {"kofn": 2, "explicit": []},
                "channel": {"theta": 2.0},
            },
            "policies": [],
            "horizon": 0,
        }
    )
    joined = "\n".join(errors)
    for needle in (
        "network.links",
        "network.interference",
        "network.channel.theta",
        "policies",
        "horizon",
    ):
        assert needle in joined, f"missing {needle} in {joined}"


def test_validation_semantic_network_checks():
    doc = {
        "network": {
            "links": 3,
            "interference": {"explicit": [[0], [1]]},
            "channel": {"theta": 0.0},
        },
        "policies": [{"kind": "stationary"}],
        "horizon": 10,
    }
    assert any("no activation set" in e for e in validate_experiment(doc))

    assert any(
        "checkpoints" in e for e in validate_experiment({**BASE_DOC, "checkpoints": [4000]})
    )
    assert any("seeds" in e for e in validate_experiment({**BASE_DOC, "seeds": [1, 1]}))
    assert any(
        "policies[0].beta" in e
        for e in validate_experiment({**BASE_DOC, "policies": [{"kind": "age", "beta": -2}]})
    )
    assert any(
        "policies[0].V" in e
        for e in validate_experiment(
            {**BASE_DOC, "policies": [{"kind": "virtual-queue", "V": 0}]}
        )
    )
    assert validate_experiment(BASE_DOC) == []


def test_parse_rejects_invalid_documents():
    with pytest.raises(ValueError, match="policies"):
        parse_experiment({**BASE_DOC, "policies": []})
    with pytest.raises(ValueError, match="horizon"):
        parse_experiment({**BASE_DOC, "horizon": -5})


def test_per_link_channel_form():
    doc = json.loads(json.dumps(BASE_DOC))
    doc["network"]["channel"] = {"per_link": [0.5, 0.6, 0.7, 0.8]}
    cfg = parse_experiment(doc)
    assert list(cfg.spec.success_probs) == [0.5, 0.6, 0.7, 0.8]
    doc["network"]["channel"] = {"per_link": [0.5, 0.6]}
    assert any("per_link" in e for e in validate_experiment(doc))


def test_theta_sweep_rewrites_channel():
    sweep = parse_sweep({"axis": "theta", "values": [0.0, 0.5], "base": BASE_DOC})
    assert sweep.values == (0.0, 0.5)
    point = point_experiment(sweep, 0.5)
    assert point.canonical["network"]["channel"]["theta"] == 0.5
    assert point.hash != point_experiment(sweep, 0.0).hash
    # the base document itself is untouched
    assert sweep.base.canonical["network"]["channel"]["theta"] == 0.25


def test_beta_and_v_sweeps_rewrite_policies():
    sweep = parse_sweep({"axis": "beta", "values": [0.0, 1.0], "base": BASE_DOC})
    point = point_experiment(sweep, 0.0)
    assert [p.get("beta") for p in point.canonical["policies"] if p["kind"] == "age"] == [0.0]

    sweep = parse_sweep({"axis": "V", "values": [0.1, 10.0], "base": BASE_DOC})
    point = point_experiment(sweep, 10.0)
    values = [p.get("V") for p in point.canonical["policies"] if p["kind"] == "virtual-queue"]
    assert values == [10.0]


def test_time_sweep_sets_horizon_and_checkpoints():
    sweep = parse_sweep({"axis": "time", "values": [100, 1000, 5000], "base": BASE_DOC})
    point = point_experiment(sweep, 1000)
    assert point.canonical["horizon"] == 5000
    assert point.canonical["checkpoints"] == [100, 1000, 5000]
    assert point.canonical["trace_level"] in ("aggregates", "full")
    # every value derives the same experiment
    assert point.hash == point_experiment(sweep, 100).hash


def test_sweep_validation_rules():
    assert validate_sweep({"axis": "theta", "values": [0.0], "base": BASE_DOC}) == []
    with pytest.raises(ValueError, match="axis"):
        parse_sweep({"axis": "gamma", "values": [1], "base": BASE_DOC})
    with pytest.raises(ValueError, match="values"):
        parse_sweep({"axis": "theta", "values": [], "base": BASE_DOC})
    with pytest.raises(ValueError, match="strictly increasing"):
        parse_sweep({"axis": "time", "values": [100, 100], "base": BASE_DOC})
    with pytest.raises(ValueError, match="theta values"):
        parse_sweep({"axis": "theta", "values": [1.5], "base": BASE_DOC})
    base_no_age = {**BASE_DOC, "policies": [{"kind": "stationary"}]}
    with pytest.raises(ValueError, match="age"):
        parse_sweep({"axis": "beta", "values": [0.5], "base": base_no_age})
    with pytest.raises(ValueError, match="virtual-queue"):
        parse_sweep({"axis": "V", "values": [1.0], "base": base_no_age})
    base_errors = {"axis": "theta", "values": [0.0], "base": {**BASE_DOC, "horizon": 0}}
    assert any(e.startswith("base.horizon") for e in validate_sweep(base_errors))


def test_theta_sweep_needs_two_level_channel():
    doc = json.loads(json.dumps(BASE_DOC))
    doc["network"]["channel"] = {"per_link": [0.5, 0.6, 0.7, 0.8]}
    with pytest.raises(ValueError, match="two-level"):
        parse_sweep({"axis": "theta", "values": [0.0], "base": doc})
