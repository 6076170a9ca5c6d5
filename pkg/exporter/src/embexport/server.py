"""HTTP inference endpoint speaking the embedding-provider wire protocol.

``POST /embed`` takes ``{"texts": ["...", ...]}`` and answers
``{"dim": n, "vectors": [[...], ...]}`` with one vector per text in request
order. The handler is stateless and synchronous, so requests are served
serially; malformed bodies answer 400 and encoder failures answer 500. An
empty texts list is a valid request and answers an empty vectors list.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .encoders import resolve_encoder


def create_app(encoder) -> FastAPI:
    """Wrap one loaded encoder in the wire protocol."""
    app = FastAPI(title="embexport", docs_url=None, redoc_url=None)

    @app.post("/embed")
    async def embed(request: Request) -> JSONResponse:
        try:
            body = await request.json()
        except Exception:
            return JSONResponse({"error": "request body must be JSON"}, status_code=400)
        if not isinstance(body, dict) or "texts" not in body:
            return JSONResponse(
                {"error": "request must be an object with a 'texts' list"}, status_code=400
            )
        texts = body["texts"]
        if not isinstance(texts, list) or not all(isinstance(t, str) for t in texts):
            return JSONResponse({"error": "'texts' must be a list of strings"}, status_code=400)
        if not texts:
            return JSONResponse({"dim": int(encoder.dim), "vectors": []})
        try:
            matrix = encoder.encode(texts)
        except Exception as exc:
            return JSONResponse({"error": f"inference failed: {exc}"}, status_code=500)
        return JSONResponse(
            {
                "dim": int(matrix.shape[1]),
                "vectors": [[float(value) for value in row] for row in matrix],
            }
        )

    return app


def serve(model_id: str, host: str = "127.0.0.1", port: int = 8756) -> None:
    """Load the model once and serve it until interrupted."""
    import uvicorn

    uvicorn.run(create_app(resolve_encoder(model_id)), host=host, port=port, log_level="info")
