import os

import pytest

from rbx.data import FileNotExistError, RbxLocalFile, makeRbxLocalFile

class TestLocalFileName:
    def test_path(self):
        f = RbxLocalFile("file://localhost/test1")
        assert f.path == "/test1"
        f = RbxLocalFile("file://localhost/tmp/test1")
        assert f.path == "/tmp/test1"
        f = RbxLocalFile("file://localhost" + os.path.abspath("./test1"))
        assert f.path == os.path.abspath("./test1")

class TestRbxLocalFile:
    def test___init__(self):
        obj = RbxLocalFile("file://localhost/test")
        assert obj.localFileName == "/test"
        obj = RbxLocalFile("file://localhost/test", **{"x": 123})
        assert obj.x == 123
        assert not obj.readOnly

    def test_exists_and_clean(self, tmpdir):
        obj = makeRbxLocalFile(str(tmpdir.join("unit-000.json")))
        assert not obj.exists
        with pytest.raises(FileNotExistError):
            obj.timeStamp
        tmpdir.join("unit-000.json").write("{}")
        assert obj.exists
        assert obj.timeStamp > 0
        obj.clean()
        assert not obj.exists
        obj.clean()

    def test_clean_directory(self, tmpdir):
        sub = tmpdir.mkdir("out")
        sub.join("a").write("x")
        obj = makeRbxLocalFile(str(sub))
        obj.clean()
        assert not sub.check()

    def test_writeJSON_only_on_change(self, tmpdir):
        obj = makeRbxLocalFile(str(tmpdir.join("deep", "config.json")))
        assert obj.writeJSON({"b": 1, "a": [1, 2]})
        assert obj.readJSON() == {"a": [1, 2], "b": 1}
        assert not obj.writeJSON({"a": [1, 2], "b": 1})
        assert obj.writeJSON({"a": [1, 2], "b": 2})


class TestMakeRbxLocalFile:
    def test_relative(self, tmpdir):
        with tmpdir.as_cwd():
            obj = makeRbxLocalFile("report.json", readOnly=True)
        assert obj.localFileName == str(tmpdir.join("report.json"))
        assert obj.readOnly
        assert str(obj) == obj.URL
