"""Base simulation class.

"""

from pathlib import Path


class Simulation:
    """Simulation base class.

    Parameters
    ----------
    n_samples : int
        Number of records to generate.
    """

    def __init__(self, n_samples):
        self.n_samples = n_samples
        self.frame = None

    def __getattr__(self, attr):
        if attr[:2] == "__" or attr == "frame":
            raise AttributeError(f"No attribute called {attr}.")
        if self.__dict__.get("frame") is None:
            raise NameError("records have not yet been simulated.")
        return getattr(self.frame, attr)

    def __len__(self):
        return self.n_samples

    def save(self, filename):
        """Save the simulated records as CSV."""
        Path(filename).parent.mkdir(parents=True, exist_ok=True)
        self.frame.to_csv(filename, index=False)
