from app import create_app
import os
import sys

app = create_app()

if __name__ == '__main__':
    if len(sys.argv) > 1:
        # python run.py eps|curve|compare --config ...
        from app.cli import cli
        with app.app_context():
            cli.main(args=sys.argv[1:], prog_name='casimir')
    else:
        port = int(os.environ.get('PORT', 5000))
        app.run(host='0.0.0.0', port=port, debug=app.config.get('DEBUG', False))
