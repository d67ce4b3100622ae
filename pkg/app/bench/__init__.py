"""
Benchmark harness: scaling curves for deployment, request generation and
search, plus the flat ⟨S, A, T⟩ baseline compared against the RBAC engine.

    python -m app.bench --scenario all --profile test --repetitions 5 --out bench-out
"""
