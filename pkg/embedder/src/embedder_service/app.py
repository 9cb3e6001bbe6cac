"""HTTP surface of the embedding sidecar.

POST /embed {"texts": [...]} -> {"dim": D, "vectors": [[...], ...]}
GET  /info                   -> {"model_id": ..., "dim": D}

Requests beyond the configured batch limit are refused with 413. The model
loads at startup; a load failure aborts the process instead of serving a
broken endpoint.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np
from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from embedder_service.model import DEFAULT_MODEL, Embedder, ModelLoadError, load_model

DEFAULT_MAX_BATCH = 256


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(model: Embedder, max_batch: int = DEFAULT_MAX_BATCH) -> FastAPI:
    app = FastAPI(title="sentence embedding sidecar")

    @app.get("/info")
    def info():
        return {"model_id": model.model_id, "dim": model.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest):
        if len(request.texts) > max_batch:
            raise HTTPException(
                status_code=413,
                detail=f"batch of {len(request.texts)} exceeds the limit of {max_batch}",
            )
        if not request.texts:
            return {"dim": model.dim, "vectors": []}
        vectors = model.encode(request.texts)
        if not np.all(np.isfinite(vectors)):
            raise HTTPException(status_code=500, detail="model produced non-finite values")
        return {"dim": model.dim, "vectors": vectors.tolist()}

    return app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--model", default=DEFAULT_MODEL, help="sbert:<id> or hash:<dim>:<seed>")
    parser.add_argument("--max-batch", type=int, default=DEFAULT_MAX_BATCH)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8041)
    args = parser.parse_args(argv)

    try:
        model = load_model(args.model)
    except ModelLoadError as e:
        print(f"refusing to serve: {e}", file=sys.stderr)
        return 1

    import uvicorn

    uvicorn.run(create_app(model, max_batch=args.max_batch), host=args.host, port=args.port)
    return 0


if __name__ == "__main__":
    sys.exit(main())
