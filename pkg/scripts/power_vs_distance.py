"""Mean power against the BS-relay distance; writes results.csv, aggregates.json and plot_data.csv."""

from _common import run

if __name__ == "__main__":
    run("power_vs_distance.yaml", __doc__)
