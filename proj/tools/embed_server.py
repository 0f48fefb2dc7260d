#!/usr/bin/env python3
"""Contextual token embeddings over HTTP for the BERTScore metric.

POST /embed  {"text": "..."}  ->  {"tokens": [...], "vectors": [[...], ...]}

Special tokens are dropped. Vectors come from one hidden layer of the model
(layer 9 of 12 is the usual BERTScore choice for multilingual BERT).

    pip install torch transformers
    python tools/embed_server.py --port 8090
    export KPBENCH_EMBEDDER_URL=http://127.0.0.1:8090
"""

import argparse
import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import torch
from transformers import AutoModel, AutoTokenizer


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", default="bert-base-multilingual-cased")
    ap.add_argument("--layer", type=int, default=9)
    ap.add_argument("--host", default="127.0.0.1")
    ap.add_argument("--port", type=int, default=8090)
    ap.add_argument("--max-length", type=int, default=512)
    args = ap.parse_args()

    tokenizer = AutoTokenizer.from_pretrained(args.model)
    model = AutoModel.from_pretrained(args.model, output_hidden_states=True).eval()
    lock = threading.Lock()

    def embed(text):
        enc = tokenizer(text, return_tensors="pt", truncation=True,
                        max_length=args.max_length, return_special_tokens_mask=True)
        special = enc.pop("special_tokens_mask")[0].bool()
        with lock, torch.no_grad():
            hidden = model(**enc).hidden_states[args.layer][0]
        ids = enc["input_ids"][0][~special]
        return {
            "tokens": tokenizer.convert_ids_to_tokens(ids.tolist()),
            "vectors": hidden[~special].tolist(),
        }

    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if self.path != "/embed":
                self.send_error(404)
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                text = json.loads(self.rfile.read(length))["text"]
                body = json.dumps(embed(text)).encode()
            except (ValueError, KeyError, TypeError) as e:
                self.send_error(400, str(e))
                return
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *_):
            pass

    print(f"embedding with {args.model} layer {args.layer} on http://{args.host}:{args.port}")
    ThreadingHTTPServer((args.host, args.port), Handler).serve_forever()


if __name__ == "__main__":
    main()
