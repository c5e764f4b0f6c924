#!/usr/bin/env python3
"""Reference implementation of the external model protocol.

attriq talks to a model process over stdin/stdout, one JSON object per line:

    request:  {"op": "predict",  "question": "...", "context": "..."}
    response: {"proba": 0.93}

    request:  {"op": "gradient", "question": "...", "context": "..."}
    response: {"tokens": ["..."], "gradient": [[...], ...]}

This stub scores contexts by word overlap with the question. Replace
`predict` / `gradient` with calls into a real checkpoint (the `gradient`
response powers saliency; tokens must appear verbatim and in order in the
context). Keep stdout line-buffered and log to stderr only.

Usage:
    attriq run --model-type external --model-command "python3 external_model_example.py" ...
or export ATTRIQ_MODEL_CMD.
"""

import json
import re
import sys


def content_words(text):
    return [w for w in re.findall(r"[A-Za-z0-9']+", text.lower()) if len(w) > 2]


def predict(question, context):
    wanted = set(content_words(question))
    if not wanted:
        return 0.0
    present = sum(1 for w in wanted if w in set(content_words(context)))
    return present / len(wanted)


def gradient(question, context):
    wanted = set(content_words(question))
    tokens = context.split()
    grad = [[1.0 if t.lower().strip(".,!?\"'") in wanted else 0.0] for t in tokens]
    return tokens, grad


def main():
    for line in sys.stdin:
        line = line.strip()
        if not line:
            continue
        try:
            req = json.loads(line)
            if req["op"] == "predict":
                resp = {"proba": predict(req["question"], req["context"])}
            elif req["op"] == "gradient":
                tokens, grad = gradient(req["question"], req["context"])
                resp = {"tokens": tokens, "gradient": grad}
            else:
                resp = {"error": "unknown op: %s" % req["op"]}
        except Exception as exc:  # keep serving after malformed requests
            resp = {"error": str(exc)}
        print(json.dumps(resp), flush=True)


if __name__ == "__main__":
    main()
