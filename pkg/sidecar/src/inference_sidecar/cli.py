import argparse
import sys

from .config import DEFAULT_CLASSIFIER, DEFAULT_DETECTOR, SidecarConfig


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(
        prog="inference-sidecar",
        description="Serve zero-shot detection and classification over the wire protocol.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=9000)
    parser.add_argument("--detector", default=DEFAULT_DETECTOR, help="detector model id")
    parser.add_argument("--classifier", default=DEFAULT_CLASSIFIER, help="classifier model id")
    parser.add_argument("--device", default="cpu")
    parser.add_argument("--concurrency", type=int, default=1)
    parser.add_argument(
        "--fake",
        action="store_true",
        help="serve deterministic stand-in responses; no models, no downloads",
    )
    args = parser.parse_args(argv)

    config = SidecarConfig(
        detector_model=args.detector,
        classifier_model=args.classifier,
        device=args.device,
        concurrency=args.concurrency,
        fake=args.fake,
    )

    from .app import create_app
    from .models import ModelLoadError

    try:
        app = create_app(config)
    except ModelLoadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        raise SystemExit(1)

    import uvicorn

    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")


if __name__ == "__main__":
    main()
