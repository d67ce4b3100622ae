from logging.config import fileConfig

from alembic import context
from sqlalchemy import create_engine, pool

from dotenv import load_dotenv

load_dotenv()

from app.core.config import get_settings
from app.db.base import Base
import app.models  # noqa: F401  store_snapshots

config = context.config

if config.config_file_name is not None:
    fileConfig(config.config_file_name)

target_metadata = Base.metadata


def _snapshot_db_url() -> str:
    """`alembic -x url=...` wins over DATABASE_URL, so a one-off SQLite file can be migrated."""
    url = context.get_x_argument(as_dictionary=True).get("url") or get_settings().DATABASE_URL
    if url.startswith("postgresql") and "sslmode=" not in url:
        url = f"{url}{'&' if '?' in url else '?'}sslmode=require"
    return url


db_url = _snapshot_db_url()
is_sqlite = db_url.startswith("sqlite")

# Never echo credentials.
print(f"Snapshot store: {db_url.split('@')[-1]}")


def run_migrations_offline() -> None:
    context.configure(
        url=db_url,
        target_metadata=target_metadata,
        literal_binds=True,
        compare_type=True,
        render_as_batch=is_sqlite,
        dialect_opts={"paramstyle": "named"},
    )
    with context.begin_transaction():
        context.run_migrations()


def run_migrations_online() -> None:
    connectable = create_engine(db_url, poolclass=pool.NullPool, pool_pre_ping=not is_sqlite)

    with connectable.connect() as connection:
        context.configure(
            connection=connection,
            target_metadata=target_metadata,
            compare_type=True,
            render_as_batch=is_sqlite,
        )
        with context.begin_transaction():
            context.run_migrations()


if context.is_offline_mode():
    run_migrations_offline()
else:
    run_migrations_online()
