"""Mean power against the rate target; writes results.csv, aggregates.json and plot_data.csv."""

from _common import run

if __name__ == "__main__":
    run("power_vs_rate.yaml", __doc__)
