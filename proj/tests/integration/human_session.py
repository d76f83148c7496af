"""Drives `fpclean serve` as a scripted annotator.

Answers every queued pair from the ground truth over the HTTP API, checks
that a second answer to the same pair is refused with 409, and that the
final /status budget equals the number of resolved pairs.
"""
import csv
import json
import subprocess
import sys
import time
import urllib.error
import urllib.request
from pathlib import Path


def get(base, path):
    with urllib.request.urlopen(base + path, timeout=10) as r:
        return json.loads(r.read())


def post(base, path, body):
    req = urllib.request.Request(base + path, data=json.dumps(body).encode(), method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req, timeout=10) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


def main():
    fpclean, work = sys.argv[1], Path(sys.argv[2])
    work.mkdir(parents=True, exist_ok=True)

    def run(*args):
        subprocess.run([fpclean, *args], check=True, cwd=work, stdout=subprocess.DEVNULL)

    run("simulate", "--dataset", "ds.ndjson", "--truth", "gt.csv", "--entities", "120", "--seed", "5")
    run("block", "--dataset", "ds.ndjson", "--out", "cands.ndjson")
    matcher = ["--truth", "gt.csv", "--fp-rate", "0.05", "--fn-rate", "0.02", "--error-decay", "0.7", "--noise-seed", "3"]
    run("match", "--dataset", "ds.ndjson", "--candidates", "cands.ndjson", "--out", "edges.ndjson", *matcher)

    truth = {}
    with open(work / "gt.csv") as f:
        for row in csv.reader(line for line in f if not line.startswith("#")):
            if row and row[0] != "record_id":
                truth[row[0]] = row[1]

    proc = subprocess.Popen([fpclean, "serve", "--dataset", "ds.ndjson", "--edges", "edges.ndjson", "--out-dir", "out",
                             "--lb-total", "120", "--port", "0", "--linger", *matcher],
                            cwd=work, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    try:
        port = json.loads(proc.stdout.readline())["listening"]
        base = f"http://127.0.0.1:{port}"
        resolved = 0
        refused = False
        component_checked = False
        deadline = time.time() + 60
        while time.time() < deadline:
            status = get(base, "/status")
            if status["done"]:
                break
            items = get(base, "/queue")["items"]
            for item in items:
                a, b = item["a"]["record_id"], item["b"]["record_id"]
                label = "match" if truth.get(a) is not None and truth.get(a) == truth.get(b) else "nomatch"
                code, body = post(base, "/queue/" + item["pairkey"], {"label": label})
                assert code == 200, (code, body)
                resolved += 1
                if not component_checked:
                    comp = get(base, "/component/" + a)
                    assert any(n["record_id"] == a for n in comp["nodes"]), comp
                    component_checked = True
                if not refused:
                    code, body = post(base, "/queue/" + item["pairkey"], {"label": label})
                    assert code == 409 and body["error"] == "NotPending", (code, body)
                    refused = True
            time.sleep(0.02)
        status = get(base, "/status")
        assert status["done"], "engine did not finish"
        assert resolved > 0 and refused
        assert status["ledger"]["spent_total"] == resolved == status["resolved"], (status["ledger"], resolved)
        reports = get(base, "/reports")
        assert reports["format"] == "fpclean.reports" and len(reports["reports"]) == 9
        code, body = post(base, "/queue/nope", {"label": "match"})
        assert code == 400, (code, body)
        print(f"human session ok: {resolved} labels over HTTP")
    finally:
        proc.terminate()
        proc.wait(timeout=10)
    assert proc.returncode == 0, proc.stderr.read()


if __name__ == "__main__":
    main()
