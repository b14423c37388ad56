import json
import os
import struct
import subprocess
from pathlib import Path

import pytest

import graphsmith

GOLDEN = Path(__file__).resolve().parents[1] / "golden" / "synth_seed12345.json"


def single_placeholder(shape):
    return json.dumps({
        "version": 1,
        "placeholders": [{"id": 0, "shape": shape}],
        "ops": [],
        "edges": [{"id": 0, "producer": [0, 0], "consumers": [], "shape": shape}],
        "metadata": {},
    })


def test_manifest_lists_ops_with_attrs():
    m = graphsmith.manifest()
    names = {op["name"] for op in m["ops"]}
    assert {"Add", "Concat", "Conv", "Gemm", "MatMul", "Relu"} <= names
    concat = next(op for op in m["ops"] if op["name"] == "Concat")
    assert concat["indegrees"] == [2, 3, 4]
    assert [a["name"] for a in concat["attrs"]] == ["axis"]


def test_generate_is_deterministic_and_valid():
    a, report = graphsmith.generate(20, seed=42, ub=15)
    b, _ = graphsmith.generate(20, seed=42, ub=15)
    assert a == b
    assert report["graphs"] == 20
    assert report["backtracks"] == 0
    for g in a:
        assert graphsmith.validate_graph(g) == ""
        assert 1 <= graphsmith.graph_metrics(g)["NOO"] <= 15


def test_bad_config_raises():
    with pytest.raises(graphsmith.ConfigError):
        graphsmith.generate(1, lb=5, ub=2)
    with pytest.raises(graphsmith.ConfigError):
        graphsmith.generate(1, strategy="grammar")


def test_check_and_infer():
    assert graphsmith.check("Add", {"indegree": 2}, [[2, 3], [2, 3]])
    assert not graphsmith.check("Add", {"indegree": 2}, [[2, 3], [3, 2]])
    assert graphsmith.infer_outputs("Concat", {"indegree": 2, "axis": 2}, [[2, 3], [2, 4]]) == [[2, 7]]
    with pytest.raises(graphsmith.PreconditionError):
        graphsmith.infer_outputs("Add", {"indegree": 2}, [[2], [3]])


def test_corpus_metrics():
    graphs, _ = graphsmith.generate(30, seed=3)
    m = graphsmith.corpus_metrics(graphs)
    assert set(m) >= {"NOO", "NOT", "NOP", "NTR", "NSA", "OTC", "IDC", "ODC", "SEC", "DEC", "SAC"}
    assert 0 < m["OTC"] <= 1
    with pytest.raises(graphsmith.EmptyCorpus):
        graphsmith.corpus_metrics([])


def test_synth_golden_vector():
    golden = json.loads(GOLDEN.read_text())
    inputs = graphsmith.synth_inputs(single_placeholder([16]), golden["data_seed"])
    shape, data = inputs[0]
    assert shape == [16]
    bits = [struct.unpack("<I", struct.pack("<f", x))[0] for x in data]
    assert bits == [int(h, 16) for h in golden["float32_bits"]]


def test_execute_matches_protocol():
    graphs, _ = graphsmith.generate(5, seed=8, whitelist=["Add", "Relu", "MatMul"])
    for g in graphs:
        direct = graphsmith.execute(g, 11)
        resp = graphsmith.handle_request({"op": "run", "graph": json.loads(g), "data_seed": 11})
        assert resp["status"] == "ok"
        assert {int(k) for k in resp["outputs"]} == set(direct)
        for k, v in resp["outputs"].items():
            assert v["shape"] == direct[int(k)][0]


def test_protocol_hello():
    resp = graphsmith.handle_request({"op": "hello"})
    assert resp["version"] == graphsmith.PROTOCOL_VERSION == 1
    assert "Relu" in resp["ops"]


@pytest.mark.skipif("GRAPHSMITH_REF_BACKEND" not in os.environ, reason="needs the built reference backend")
def test_reference_backend_process_speaks_protocol():
    graphs, _ = graphsmith.generate(3, seed=1)
    lines = [json.dumps({"op": "hello"})]
    lines += [json.dumps({"op": "run", "graph": json.loads(g), "data_seed": 2}) for g in graphs]
    out = subprocess.run([os.environ["GRAPHSMITH_REF_BACKEND"]], input="\n".join(lines) + "\n",
                         capture_output=True, text=True, timeout=60, check=True).stdout.splitlines()
    assert json.loads(out[0])["version"] == 1
    assert all(json.loads(line)["status"] == "ok" for line in out[1:])
