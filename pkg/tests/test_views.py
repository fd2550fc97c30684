# tests/test_views.py
from app.models import db
from app.services.database_service import find_by_hash, get_run, list_runs, record_report


def test_empty_registry(client):
    response = client.get("/runs")
    assert response.status_code == 200
    assert response.get_json() == {"runs": []}


def test_unknown_run_is_404(client):
    assert client.get("/runs/99").status_code == 404
    assert client.get("/runs/99/frames").status_code == 404


def test_reports_are_listed_by_kind(app, client, tmp_path):
    with app.app_context():
        first_id = record_report("validate", "disk", "", True, tmp_path).id
        record_report("converge", "pair", "abc", False, tmp_path)
        assert get_run(first_id).kind == "validate"
        assert [e.name for e in find_by_hash("abc")] == ["pair"]
        assert len(list_runs()) == 2
        db.session.remove()

    kinds = [r["kind"] for r in client.get("/runs?kind=converge").get_json()["runs"]]
    assert kinds == ["converge"]
    # reports have no frames on disk
    assert client.get(f"/runs/{first_id}/frames").status_code == 404
