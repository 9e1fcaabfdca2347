import json
from fractions import Fraction

import pytest
from pydantic import ValidationError

from src.config import FACTORS_FILE, KNOWN_ICPS_FILE
from src.records import (
    EnclosureRecord,
    FactorDB,
    FactorStateFile,
    IcpDB,
    RecordError,
    RunRecord,
    SearchConfig,
    SearchStats,
    load_model,
    parse_rational,
    save_model,
)


def test_shipped_databases_validate():
    factors = load_model(FACTORS_FILE, FactorDB)
    assert len(factors.factors) == 23
    assert factors.factors["h1"] == [0, 1, -1]
    icps = load_model(KNOWN_ICPS_FILE, IcpDB)
    assert len(icps.icps) == 16
    assert {e.degree for e in icps.icps} >= {147, 158, 191, 239, 244}


def test_rationals_parse_and_serialize_exactly():
    config = SearchConfig(n=4, c0="1/16", rel_tol=Fraction(1, 10**9))
    assert config.c0 == Fraction(1, 16)
    dumped = config.model_dump(mode="json")
    assert dumped["c0"] == "1/16"
    assert dumped["rel_tol"] == "1/1000000000"
    assert parse_rational(3) == 3
    with pytest.raises(ValueError):
        parse_rational(True)
    with pytest.raises(ValidationError):
        SearchConfig(n=4, c0=0.0625)


def test_search_config_rejects_bad_values():
    with pytest.raises(ValidationError):
        SearchConfig(n=0)
    with pytest.raises(ValidationError):
        SearchConfig(n=4, mode="exhaustive")
    with pytest.raises(ValidationError):
        SearchConfig(n=4, worker_count=0)
    with pytest.raises(ValidationError):
        SearchConfig(n=4, unknown_field=1)


def test_factor_state_takes_one_source():
    assert FactorStateFile(degree=10, factors="h1^2 h2").coefficients is None
    with pytest.raises(ValidationError):
        FactorStateFile(degree=10, factors="h1", coefficients=[0, 1, -1])


def test_run_record_round_trip(tmp_path):
    record = RunRecord(
        config=SearchConfig(n=2, c0="1"),
        degree=2,
        odd=False,
        known_factor=[1],
        missing_factor=[0, 1],
        factored="h1",
        cofactor=[1],
        coefficients=[0, 1, -1],
        norm=EnclosureRecord(lo=Fraction(1, 4), hi=Fraction(1, 4)),
        t="0.50000000",
        t_enclosure=EnclosureRecord(lo=Fraction(1, 2), hi=Fraction(1, 2)),
        stats=SearchStats(vectors_enumerated=3),
    )
    path = tmp_path / "runs" / "degree_2.json"
    save_model(path, record)
    assert json.loads(path.read_text())["norm"] == {"lo": "1/4", "hi": "1/4"}
    assert load_model(path, RunRecord) == record


def test_load_failures_become_record_errors(tmp_path):
    with pytest.raises(RecordError):
        load_model(tmp_path / "missing.json", FactorDB)
    broken = tmp_path / "broken.json"
    broken.write_text("{not json")
    with pytest.raises(RecordError):
        load_model(broken, FactorDB)
    wrong = tmp_path / "wrong.json"
    wrong.write_text(json.dumps({"factors": {"h1": "x - x^2"}}))
    with pytest.raises(RecordError):
        load_model(wrong, FactorDB)
