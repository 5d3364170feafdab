from core.management.lab_command import LabCommand
from core.run_config import parse_bool
from core.scaling_utils import (
    PRODUCT_QUANTITIES, QUANTITIES, arnold_check, product_spectrum, shell_spectrum,
)
from core.snapshot_io import read_spectral, write_plot_file, write_rows, write_spectrum_csv


def parse_products(value):
    items = value if isinstance(value, (list, tuple)) else str(value).split(',')
    products = tuple(item.strip() for item in items if item.strip())
    unknown = [item for item in products if item not in PRODUCT_QUANTITIES]
    if unknown:
        raise ValueError(f'unknown product quantity {", ".join(unknown)}')
    return products


class Command(LabCommand):
    help = 'Shell spectra of a spectral snapshot with log-log slope fits'
    subcommand = 'spectra'
    option_types = {'snapshot': str, 'products': parse_products, 'fit_kmin': int, 'fit_kmax': int,
                    'plot': parse_bool, 'N': int}
    option_defaults = {'products': ('helicity_sq', 'delta2', 'energy_pair'), 'fit_kmin': 4,
                       'fit_kmax': None, 'plot': False, 'N': None}

    def add_command_arguments(self, parser):
        parser.add_argument('snapshot', help='spectral .csv snapshot')
        parser.add_argument('--products', help='comma separated product quantities')
        parser.add_argument('--fit-kmin', dest='fit_kmin', type=int)
        parser.add_argument('--fit-kmax', dest='fit_kmax', type=int)
        parser.add_argument('--plot', action='store_true', default=None, help='write two-column k/value files')
        parser.add_argument('--N', type=int, help='grid for the pseudo-spectral products')

    def run(self, config, out_dir):
        field = read_spectral(config['snapshot'])
        fit_range = (config['fit_kmin'], config['fit_kmax'])
        spectra = [shell_spectrum(field, quantity, fit_range) for quantity in QUANTITIES]
        spectra += [product_spectrum(field, quantity, config['N'], fit_range)
                    for quantity in config['products']]

        fits = []
        for spectrum in spectra:
            write_spectrum_csv(out_dir / f'spectrum_{spectrum.quantity}.csv', spectrum)
            if config['plot']:
                write_plot_file(out_dir / f'spectrum_{spectrum.quantity}.dat', spectrum)
            notice = '; '.join(spectrum.notices)
            if spectrum.slope is None:
                self.notice(f'{spectrum.quantity}: {notice}')
                fits.append((spectrum.quantity, '', '', '', '', notice))
                continue
            kmin, kmax = spectrum.fit_range
            fits.append((spectrum.quantity, spectrum.slope, spectrum.slope_stderr, kmin, kmax, notice))
            self.stdout.write(f'{spectrum.quantity:12s} slope {spectrum.slope:+.4f} '
                              f'+- {spectrum.slope_stderr:.4f} on [{kmin}, {kmax}]')
        write_rows(out_dir / 'fits.csv', ['quantity', 'slope', 'stderr', 'kmin', 'kmax', 'notice'], fits)

        arnold = arnold_check(field)
        self.stdout.write(f'U = {arnold.U:.6g} >= kmin |chi| = {arnold.kmin_active * arnold.abs_chi:.6g} '
                          f'(U/|chi| = {arnold.C_effective:.6g})')
        if not arnold.satisfied:
            return ['U >= kmin |chi|']
        self.success(f'Wrote {len(spectra)} spectra to {out_dir}')
        return []
