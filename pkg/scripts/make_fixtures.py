#!/usr/bin/env python3
"""Regenerate the bundled synthetic price fixtures.

Two one-year daily histories (253 price rows, 3 tickers each) drawn from a
correlated lognormal generator with fixed seeds:

  crypto_like.csv  high volatility (roughly 95-125% annualized), strongly
                   correlated, mixed drifts
  equity_like.csv  moderate volatility (roughly 22-30%), mid correlation,
                   positive drifts

Each CSV gets a .meta.json sidecar recording the generator parameters, the
seed, and the risk numbers the default pipeline reports on the file, so the
data's provenance is auditable. Seeds were chosen so the sampled window is
typical of its generator: the high-volatility portfolio must report a lower
5% VaR value and a higher chance of loss than the low-volatility one under
the default pipeline, which is the qualitative contrast the fixtures exist
to exhibit. Rerunning this script reproduces the files byte for byte.

Usage: python3 scripts/make_fixtures.py [--out-dir data]
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from gbmrisk.cli import RunConfig, run_pipeline
from gbmrisk.market_data import PriceSeries, save_prices

TRADING_DAYS = 252
START_DATE = dt.date(2024, 1, 2)


@dataclass(frozen=True)
class GeneratorParams:
    name: str
    tickers: tuple[str, ...]
    mu: tuple[float, ...]  # annualized drifts
    sigma: tuple[float, ...]  # annualized volatilities
    corr: tuple[tuple[float, ...], ...]
    s0: tuple[float, ...]
    seed: int


CRYPTO_LIKE = GeneratorParams(
    name="crypto_like",
    tickers=("CRA", "CRB", "CRC"),
    mu=(0.10, 0.05, -0.05),
    sigma=(0.95, 1.10, 1.25),
    corr=(
        (1.00, 0.82, 0.76),
        (0.82, 1.00, 0.80),
        (0.76, 0.80, 1.00),
    ),
    s0=(0.52, 98.0, 1.85),
    seed=20240102,
)

EQUITY_LIKE = GeneratorParams(
    name="equity_like",
    tickers=("EQA", "EQB", "EQC"),
    mu=(0.12, 0.10, 0.08),
    sigma=(0.22, 0.30, 0.26),
    corr=(
        (1.00, 0.55, 0.48),
        (0.55, 1.00, 0.42),
        (0.48, 0.42, 1.00),
    ),
    s0=(185.0, 480.0, 250.0),
    seed=20240103,
)


def trading_dates(start: dt.date, count: int) -> tuple[str, ...]:
    """ISO dates skipping weekends, `count` of them from `start`."""
    dates = []
    day = start
    while len(dates) < count:
        if day.weekday() < 5:
            dates.append(day.isoformat())
        day += dt.timedelta(days=1)
    return tuple(dates)


def generate_prices(gen: GeneratorParams) -> PriceSeries:
    """Sample one year of correlated lognormal daily prices."""
    mu = np.array(gen.mu)
    sigma = np.array(gen.sigma)
    corr = np.array(gen.corr)
    cov = corr * np.outer(sigma, sigma)
    daily_mean = (mu - sigma**2 / 2.0) / TRADING_DAYS
    daily_chol = np.linalg.cholesky(cov / TRADING_DAYS)
    rng = np.random.default_rng(gen.seed)
    z = rng.standard_normal((TRADING_DAYS, len(gen.tickers)))
    log_increments = daily_mean + z @ daily_chol.T
    log_prices = np.log(np.array(gen.s0)) + np.vstack(
        [np.zeros(len(gen.tickers)), np.cumsum(log_increments, axis=0)]
    )
    prices = np.exp(log_prices)
    prices[0] = gen.s0  # exact round-trip of the configured start prices
    return PriceSeries(
        tickers=gen.tickers,
        dates=trading_dates(START_DATE, TRADING_DAYS + 1),
        prices=prices,
    )


def pipeline_summary(csv_path: Path) -> dict:
    result = run_pipeline(RunConfig(price_csv=str(csv_path)))
    return {
        "portfolio_mode": "mvp",
        "weights": result.weights.as_dict(),
        "portfolio_volatility": result.stats.volatility,
        "var_value": result.report.var_value,
        "chance_of_loss": result.report.chance_of_loss,
    }


def write_fixture(gen: GeneratorParams, out_dir: Path) -> dict:
    series = generate_prices(gen)
    csv_path = out_dir / f"{gen.name}.csv"
    save_prices(series, csv_path)
    summary = pipeline_summary(csv_path)
    meta = {
        "generator": {
            "tickers": list(gen.tickers),
            "annualized_mu": list(gen.mu),
            "annualized_sigma": list(gen.sigma),
            "correlation": [list(row) for row in gen.corr],
            "initial_prices": list(gen.s0),
            "seed": gen.seed,
            "trading_days": TRADING_DAYS,
            "start_date": START_DATE.isoformat(),
        },
        "default_pipeline_report": summary,
        "regenerate": "python3 scripts/make_fixtures.py",
    }
    meta_path = out_dir / f"{gen.name}.meta.json"
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"wrote {csv_path} and {meta_path}")
    print(
        f"  var_value={summary['var_value']:.2f} "
        f"chance_of_loss={summary['chance_of_loss']:.4f} "
        f"mvp_vol={summary['portfolio_volatility']:.4f}"
    )
    return summary


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="data")
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    high_vol = write_fixture(CRYPTO_LIKE, out_dir)
    low_vol = write_fixture(EQUITY_LIKE, out_dir)

    var_ordered = high_vol["var_value"] < low_vol["var_value"]
    loss_ordered = high_vol["chance_of_loss"] > low_vol["chance_of_loss"]
    if not (var_ordered and loss_ordered):
        print(
            "FIXTURE CHECK FAILED: high-volatility fixture must report "
            "strictly lower VaR value and strictly higher chance of loss; "
            "pick a different seed.",
            file=sys.stderr,
        )
        return 1
    print("fixture contrast check passed: lower VaR value and higher "
          "chance of loss on the high-volatility data")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
