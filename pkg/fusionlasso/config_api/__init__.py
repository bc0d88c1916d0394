"""Config API.

------

Specify a pipeline using a config, e.g. to calibrate lambda and sample the
posterior of a lattice-structured model::

    config = ```
        load_data:
            inputs: records.csv
            config: columns.json
            structure: lattice
            weights: size
        calibrate:
            n_grid: 50
            folds: 20
            seed: 7
        sample:
            seed: 7
            n_chains: 4
            n_iter: 10000
            burn_in: 5000
    ```

and run with::

    run_pipeline(config, output_dir="results")

------

Note
----
Each step is also a subcommand of the command line interface::

    % fusionlasso check-propriety --data d.csv --config c.json --structure s.json
    % fusionlasso fit-em --data d.csv --config c.json --lambda grid
    % fusionlasso sample --data d.csv --config c.json --chains 4 --seed 7
    % fusionlasso calibrate --data d.csv --config c.json --grid 50 --folds 20 --seed 7
    % fusionlasso simulate --G 25 --r 20 --S 12 --reps 100 --seed 7
    % fusionlasso diagnose --draws draws.bin

Outputs are written to :code:`--output` (default: the working directory)
together with a :code:`run.json` record. Passing :code:`--from-run run.json`
reproduces a run. Invalid input exits with status 2.
"""

from fusionlasso.config_api import pipeline, wrappers
