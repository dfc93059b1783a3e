#!/usr/bin/env python3
"""Record API responses for the frontend contract tests.

Runs the service in-process against the bundled instant-payments model and
freezes the JSON payloads under fixtures/. Rerun after engine changes:

    python3 scripts/record-fixtures.py
"""

import json
from pathlib import Path

from fastapi.testclient import TestClient
from riskdag.casestudy import MITIGATIVE_BARRIERS, SITUATION_CUTS, case_study_model
from riskdag.model_io import export_xml
from riskdag.service import ModelStore, ServiceConfig, create_app

OUT = Path(__file__).resolve().parent.parent / "fixtures"


def save(name, payload):
    (OUT / f"{name}.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    app = create_app(ServiceConfig(), ModelStore(None), poster=lambda url, payload: None)
    client = TestClient(app)
    mid = client.post("/models/import", content=export_xml(case_study_model())).json()["id"]

    save("model", client.get(f"/models/{mid}").json())
    save("validate", client.get(f"/models/{mid}/validate").json())
    save("estimates", client.get(f"/models/{mid}/estimates").json())
    save("cpt_queue_saturation", client.get(f"/models/{mid}/cpts/queue-saturation").json())

    token = client.post(
        f"/models/{mid}/capture-tokens",
        json={"scope": ["automatic-rollback"], "issued_to": "deploy-team"},
    ).json()["token"]
    save("capture_page", client.get(f"/capture/{token}").json())

    client.put(f"/models/{mid}/evidence", json=dict(SITUATION_CUTS[3]))
    save("model_cut3", client.get(f"/models/{mid}").json())
    save("posterior_cut3", client.get(f"/models/{mid}/posterior").json())
    save(
        "rank_cut3",
        client.get(
            f"/models/{mid}/interventions/rank",
            params={
                "target": "consequences",
                "state": "transaction loss",
                "candidates": ",".join(MITIGATIVE_BARRIERS),
            },
        ).json(),
    )
    save(
        "dsep_chain",
        client.get(
            f"/models/{mid}/causal/dsep",
            params={
                "x": "faulty-change",
                "y": "high-latency",
                "z": "queue-saturation,automatic-rollback",
            },
        ).json(),
    )
    save(
        "trails",
        client.get(
            f"/models/{mid}/causal/trails",
            params={"x": "faulty-change", "y": "consequences", "z": ""},
        ).json(),
    )
    save(
        "backdoor",
        client.get(
            f"/models/{mid}/causal/backdoor",
            params={"x": "high-latency", "y": "consequences", "mode": "minimal"},
        ).json(),
    )
    client.delete(f"/models/{mid}/evidence")
    save("posterior_prior", client.get(f"/models/{mid}/posterior").json())

    # a deterministic gate table for the read-only editor case
    gid = client.post("/models", json={}).json()["id"]
    client.post(f"/models/{gid}/nodes", json={"name": "T1", "id": "t1", "kind": "cause"})
    client.post(f"/models/{gid}/nodes", json={"name": "T2", "id": "t2", "kind": "cause"})
    client.post(f"/models/{gid}/nodes", json={"name": "Both", "id": "g", "kind": "gate-and"})
    client.post(f"/models/{gid}/edges", json={"parent": "t1", "child": "g"})
    client.post(f"/models/{gid}/edges", json={"parent": "t2", "child": "g"})
    client.post(f"/models/{gid}/cpts/g/refresh")
    save("cpt_gate", client.get(f"/models/{gid}/cpts/g").json())

    # the structural rejection payload the editor shows inline
    bad = client.post(f"/models/{gid}/edges", json={"parent": "g", "child": "t1"})
    save("cycle_error", {"status": bad.status_code, "detail": bad.json()["detail"]})

    print("recorded:", ", ".join(sorted(p.name for p in OUT.glob("*.json"))))


if __name__ == "__main__":
    main()
