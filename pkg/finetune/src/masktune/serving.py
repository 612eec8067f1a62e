"""HTTP fill-mask endpoint for an exported model directory.

Implements ``POST /fill-mask`` with ``{"model", "prompt", "top_k"}`` in and
``{"predictions": [{"token", "score"}, ...]}`` out, ranked by probability.
Prompts must contain the tokenizer's mask token exactly once; requests naming
a different model than the one being served are rejected with 400.
"""

from __future__ import annotations

from typing import Optional

import torch
from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel


class FillMaskRequest(BaseModel):
    prompt: str
    top_k: int = 10
    model: Optional[str] = None


def create_app(model_dir: str, model_id: Optional[str] = None) -> FastAPI:
    from transformers import AutoModelForMaskedLM, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModelForMaskedLM.from_pretrained(model_dir)
    model.eval()
    served_id = model_id or model_dir

    app = FastAPI(title="masktune fill-mask server")

    @app.exception_handler(RequestValidationError)
    async def malformed_request(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"error": str(exc.errors()[:1])})

    def bad_request(message: str) -> JSONResponse:
        return JSONResponse(status_code=400, content={"error": message})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "model": served_id, "vocab_size": len(tokenizer)}

    @app.post("/fill-mask")
    def fill_mask(request: FillMaskRequest):
        if request.model is not None and request.model != served_id:
            return bad_request(f"unknown model {request.model!r}; serving {served_id!r}")
        if request.top_k < 1:
            return bad_request(f"top_k must be >= 1, got {request.top_k}")
        if request.prompt.count(tokenizer.mask_token) != 1:
            return bad_request(
                f"prompt must contain {tokenizer.mask_token!r} exactly once"
            )
        encoding = tokenizer(request.prompt, return_tensors="pt")
        mask_positions = (encoding["input_ids"][0] == tokenizer.mask_token_id).nonzero()
        if len(mask_positions) != 1:
            return bad_request("prompt must encode to exactly one mask token")
        with torch.no_grad():
            logits = model(**encoding).logits[0, mask_positions[0, 0]]
        probabilities = torch.softmax(logits, dim=-1)
        k = min(request.top_k, probabilities.shape[-1])
        top = torch.topk(probabilities, k)
        tokens = tokenizer.convert_ids_to_tokens(top.indices.tolist())
        return {
            "predictions": [
                {"token": token, "score": float(score)}
                for token, score in zip(tokens, top.values.tolist())
            ]
        }

    return app


def serve(model_dir: str, port: int = 8000, host: str = "127.0.0.1",
          model_id: Optional[str] = None) -> None:
    import uvicorn

    uvicorn.run(create_app(model_dir, model_id), host=host, port=port, log_level="info")
