import copy
import json
from pathlib import Path

import pytest

from mvkit.errors import ConfigError
from mvkit.kinematics import MechanismGeometry
from mvkit.utils.config import load_project, load_settings, load_trajectory, parse_document, ProjectConfig


def _write(tmp_path, doc, name="project.json"):
    path = tmp_path / name
    path.write_text(doc if isinstance(doc, str) else json.dumps(doc))
    return path


@pytest.fixture
def project_doc(sample_data):
    return json.loads((sample_data / "reference_five_bar.json").read_text())


def _code_and_location(path, loader=load_project):
    with pytest.raises(ConfigError) as exc:
        loader(path)
    return exc.value.code, exc.value.location


def test_sample_project_is_the_reference_mechanism(sample_data):
    config = load_project(sample_data / "reference_five_bar.json")
    assert config.name == "reference-five-bar"
    assert config.to_geometry() == MechanismGeometry.reference()
    assert config.to_obstacles() == ()
    assert config.decomposition.samples_per_cell == 9
    assert config.decomposition.w_bounds() is None
    assert config.geometry.joint_clearance == 2.5
    assert config.decomposition.min_aspect_cells == 8


def test_obstacles_are_built(tmp_path, project_doc):
    project_doc["obstacles"] = [{"id": "crate", "vertices": [[2, 8], [2, 9], [3, 9], [3, 8]]}]
    obstacles = load_project(_write(tmp_path, project_doc)).to_obstacles()
    assert [o.id for o in obstacles] == ["crate"]
    # clockwise input comes back counterclockwise
    assert obstacles[0].vertices[0].x == 3.0


def test_negative_length(tmp_path, project_doc):
    project_doc["geometry"]["L1"] = -7
    assert _code_and_location(_write(tmp_path, project_doc)) == ("BAD-LENGTH", "geometry.L1")


def test_inconsistent_anchors(tmp_path, project_doc):
    project_doc["geometry"]["a2"] = [9.0, 0.0]
    assert _code_and_location(_write(tmp_path, project_doc)) == ("GEOMETRY-INCONSISTENT", "geometry.a2")


def test_malformed_json(tmp_path):
    code, location = _code_and_location(_write(tmp_path, '{"geometry": {\n  "L0": 8,,\n}'))
    assert code == "MALFORMED-DOCUMENT"
    assert location.startswith("line 2 column")
    code, _ = _code_and_location(_write(tmp_path, "[1, 2]"))
    assert code == "MALFORMED-DOCUMENT"


def test_missing_file(tmp_path):
    code, _ = _code_and_location(tmp_path / "absent.json")
    assert code == "MISSING-FILE"


def test_unknown_field(tmp_path, project_doc):
    project_doc["colour"] = "red"
    assert _code_and_location(_write(tmp_path, project_doc)) == ("INVALID-FIELD", "colour")


def test_bad_polygon(tmp_path, project_doc):
    bowtie = [[0, 0], [2, 2], [2, 0], [0, 2]]
    project_doc["obstacles"] = [{"id": "ok", "vertices": [[20, 20], [21, 20], [21, 21]]},
                                {"id": "bowtie", "vertices": bowtie}]
    assert _code_and_location(_write(tmp_path, project_doc)) == ("BAD-POLYGON", "obstacles.1")
    project_doc["obstacles"] = [{"id": "ok", "vertices": [[20, 20], [21, 20], [21, 21]]}] * 2
    assert _code_and_location(_write(tmp_path, project_doc))[0] == "BAD-POLYGON"


def test_bad_decomposition(tmp_path, project_doc):
    doc = copy.deepcopy(project_doc)
    doc["decomposition"]["samples_per_cell"] = 3
    assert _code_and_location(_write(tmp_path, doc)) == ("BAD-DECOMPOSITION", "decomposition.samples_per_cell")
    doc = copy.deepcopy(project_doc)
    doc["decomposition"]["bounds"] = {"x0": -9, "y0": -9, "side": 26}
    doc["decomposition"]["min_cell"] = 0.26
    assert _code_and_location(_write(tmp_path, doc)) == ("BAD-DECOMPOSITION", "decomposition.bounds")


def test_trajectory_documents(tmp_path, sample_data):
    t = load_trajectory(sample_data / "single_aspect.json")
    assert len(t.waypoints) == 3
    assert t.sampling_step is None
    code, _ = _code_and_location(_write(tmp_path, {"waypoints": [[1, 2]]}, "t.json"), load_trajectory)
    assert code == "BAD-TRAJECTORY"
    code, _ = _code_and_location(_write(tmp_path, {"waypoints": [[1, 2], [3, 4]], "speed": 1}, "t.json"),
                                 load_trajectory)
    assert code == "BAD-TRAJECTORY"


def test_parse_document_reports_first_error():
    with pytest.raises(ConfigError) as exc:
        parse_document('{"geometry": {"L0": 8}}', ProjectConfig)
    assert exc.value.code == "BAD-LENGTH"
    assert exc.value.location == "geometry.L1"
    assert str(exc.value).startswith("error[BAD-LENGTH] geometry.L1:")


def test_settings_from_environment(monkeypatch, tmp_path):
    monkeypatch.setenv("MVKIT_CACHE", str(tmp_path / "cache"))
    monkeypatch.setenv("MVKIT_LOG_LEVEL", "debug")
    monkeypatch.setenv("MVKIT_WORKERS", "0")
    settings = load_settings(tmp_path / "missing.env")
    assert settings.cache_dir == Path(tmp_path / "cache")
    assert settings.log_level == "DEBUG"
    assert settings.workers == 1


def test_settings_from_dotenv(monkeypatch, tmp_path):
    monkeypatch.setenv("MVKIT_WORKERS", "placeholder")
    monkeypatch.delenv("MVKIT_WORKERS")
    monkeypatch.delenv("MVKIT_CACHE", raising=False)
    env = tmp_path / ".env"
    env.write_text("MVKIT_WORKERS=3\n")
    assert load_settings(env).workers == 3


def test_non_integer_workers(monkeypatch, tmp_path):
    monkeypatch.setenv("MVKIT_WORKERS", "many")
    with pytest.raises(ConfigError) as exc:
        load_settings(tmp_path / "missing.env")
    assert exc.value.code == "INVALID-FIELD"
