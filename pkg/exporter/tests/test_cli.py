"""Command-line interface exit codes and output."""

import json

import pytest

from embexport.cli import main


def write_texts(path, records):
    path.write_text("".join(json.dumps(record) + "\n" for record in records))
    return path


def run(*argv):
    return main(list(argv))


class TestExportCommand:
    def test_success_echoes_summary(self, tmp_path, capsys):
        texts = write_texts(
            tmp_path / "texts.jsonl",
            [{"id": "a", "text": "grain"}, {"id": "b", "text": "mining"}],
        )
        out = tmp_path / "vectors.emb"
        rc = run("export", "--texts", str(texts), "--out", str(out), "--model", "hash:8")
        assert rc == 0
        assert out.exists()
        stdout = capsys.readouterr().out
        assert "exported 2 vectors of dim 8" in stdout

    def test_missing_texts_file_is_usage_error(self, tmp_path, capsys):
        rc = run("export", "--texts", str(tmp_path / "absent.jsonl"),
                 "--out", str(tmp_path / "x.emb"))
        assert rc == 1
        capsys.readouterr()

    def test_malformed_texts_is_data_error(self, tmp_path, capsys):
        texts = tmp_path / "texts.jsonl"
        texts.write_text("{broken\n")
        rc = run("export", "--texts", str(texts), "--out", str(tmp_path / "x.emb"))
        assert rc == 2
        assert "data error:" in capsys.readouterr().err

    def test_bad_model_id_is_data_error(self, tmp_path, capsys):
        texts = write_texts(tmp_path / "texts.jsonl", [{"id": "a", "text": "x"}])
        rc = run("export", "--texts", str(texts), "--out", str(tmp_path / "x.emb"),
                 "--model", "hash:x")
        assert rc == 2
        assert "data error:" in capsys.readouterr().err

    def test_unknown_format_is_usage_error(self, tmp_path, capsys):
        texts = write_texts(tmp_path / "texts.jsonl", [{"id": "a", "text": "x"}])
        rc = run("export", "--texts", str(texts), "--out", str(tmp_path / "x.emb"),
                 "--format", "parquet")
        assert rc == 1
        capsys.readouterr()


class TestHelpAndVersion:
    @pytest.mark.parametrize("argv", [["--help"], ["--version"], ["export", "--help"],
                                      ["serve", "--help"]])
    def test_exit_zero(self, argv, capsys):
        assert main(argv) == 0
        capsys.readouterr()
