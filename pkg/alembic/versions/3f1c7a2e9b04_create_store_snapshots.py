"""create store_snapshots

Revision ID: 3f1c7a2e9b04
Revises:
Create Date: 2026-10-18 16:40:12.118204

"""

from typing import Sequence, Union

from alembic import op
import sqlalchemy as sa

# revision identifiers, used by Alembic.
revision: str = "3f1c7a2e9b04"
down_revision: Union[str, Sequence[str], None] = None
branch_labels: Union[str, Sequence[str], None] = None
depends_on: Union[str, Sequence[str], None] = None


def upgrade() -> None:
    """Upgrade schema."""
    op.create_table(
        "store_snapshots",
        sa.Column("id", sa.Integer(), autoincrement=True, nullable=False),
        sa.Column("major_version", sa.Integer(), nullable=False),
        sa.Column("minor_version", sa.Integer(), nullable=False),
        sa.Column("digest", sa.String(length=64), nullable=False),
        sa.Column("document", sa.Text(), nullable=False),
        sa.Column("created_at", sa.DateTime(timezone=True), nullable=False),
        sa.PrimaryKeyConstraint("id"),
    )
    op.create_index(op.f("ix_store_snapshots_digest"), "store_snapshots", ["digest"], unique=False)
    op.create_index(op.f("ix_store_snapshots_created_at"), "store_snapshots", ["created_at"], unique=False)


def downgrade() -> None:
    """Downgrade schema."""
    op.drop_index(op.f("ix_store_snapshots_created_at"), table_name="store_snapshots")
    op.drop_index(op.f("ix_store_snapshots_digest"), table_name="store_snapshots")
    op.drop_table("store_snapshots")
