"""Command line entry point: run the local service or bulk-transfer a store.

All flags can also be set through environment variables prefixed AUDIO_
(e.g. AUDIO_STORE, AUDIO_BIND).
"""

from __future__ import annotations

import sys

import click

from . import __version__


@click.command(context_settings={"auto_envvar_prefix": "AUDIO"})
@click.option("--store", "store_path", required=True, type=click.Path(), help="Encrypted store file.")
@click.option("--credentials", "credentials_path", required=True, type=click.Path(), help="Credentials JSON file.")
@click.option("--bind", default="127.0.0.1:8000", show_default=True, help="ADDR:PORT to listen on.")
@click.option("--ui-dir", default=None, type=click.Path(), help="Static UI assets to serve at /.")
@click.option("--export", "export_file", default=None, type=click.Path(), help="Dump the store as JSON lines and exit.")
@click.option("--import", "import_file", default=None, type=click.Path(exists=True), help="Merge a JSON-lines dump into the store and exit.")
@click.option("--import-mode", type=click.Choice(["skip", "overwrite"]), default="skip", show_default=True, help="What to do on key collisions during import.")
@click.option("--username", default=None, help="Username for headless export/import.")
@click.option("--password", default=None, help="Password for headless export/import (prompted if omitted).")
@click.version_option(__version__)
def main(store_path, credentials_path, bind, ui_dir, export_file, import_file, import_mode, username, password):
    """Run the hearing test record service, or transfer store contents."""
    if export_file or import_file:
        _bulk_transfer(
            store_path, credentials_path, export_file, import_file, import_mode, username, password
        )
        return

    import uvicorn

    from .service import create_app

    host, _, port = bind.rpartition(":")
    if not host:
        raise click.BadParameter("--bind must look like ADDR:PORT")
    if host not in ("127.0.0.1", "localhost", "::1"):
        click.echo(
            f"warning: binding {host} exposes patient data beyond this machine",
            err=True,
        )
    app = create_app(store_path, credentials_path, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=int(port))


def _bulk_transfer(store_path, credentials_path, export_file, import_file, import_mode, username, password):
    from . import auth
    from .store import Store

    if not username:
        username = click.prompt("Username")
    if not password:
        password = click.prompt("Password", hide_input=True)
    key = auth.login(username, password, credentials_path)
    store = Store.open(store_path, key)
    try:
        if export_file:
            with open(export_file, "w", encoding="utf-8") as fp:
                fp.write(store.export_jsonl())
            click.echo(f"exported store to {export_file}")
        if import_file:
            with open(import_file, encoding="utf-8") as fp:
                result = store.import_jsonl(fp.read(), on_collision=import_mode)
            click.echo(
                f"imported {result['imported']} rows, "
                f"{len(result['collisions'])} collisions ({import_mode})"
            )
            for c in result["collisions"]:
                click.echo(f"  collision: {c['table']} {c['patient_id']} {c['exam_date']}")
    finally:
        store.close()


if __name__ == "__main__":
    sys.exit(main())
