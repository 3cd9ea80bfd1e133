"""Mean power against the number of users; writes results.csv, aggregates.json and plot_data.csv."""

from _common import run

if __name__ == "__main__":
    run("power_vs_users.yaml", __doc__)
