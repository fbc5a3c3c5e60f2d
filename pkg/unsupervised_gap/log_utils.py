import logging

_batch_losses = False

_FORMAT = '%(asctime)s %(name)s %(levelname)s: %(message)s'


def log_batch_losses():
    """True when the loss of every mini-batch should be logged."""
    return _batch_losses


def init_logging(verbose, main=None):
    """`-v` logs INFO of the `main` logger, `-vv` INFO of all loggers, `-vvv`
    DEBUG, and `-vvvv` also the loss of every mini-batch."""
    global _batch_losses
    _batch_losses = False
    if not verbose or verbose <= 0:
        return

    if main:
        if verbose == 1:
            console = logging.StreamHandler()
            main.addHandler(console)
            main.setLevel(logging.INFO)
            return
        verbose -= 1

    if verbose <= 1:
        logging.basicConfig(level=logging.INFO, format=_FORMAT)
        return

    logging.basicConfig(level=logging.DEBUG, format=_FORMAT)
    if verbose <= 2:
        return

    _batch_losses = True
