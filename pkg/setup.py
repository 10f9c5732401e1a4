from setuptools import setup

setup(name='endslab',
      version='1.0',
      packages=['endslab', 'tests'],
      description='Maximal functions and heat kernels on R^n # R^m.',
      long_description=open('README.rst').read(),
      install_requires=['numpy>=1.17', 'scipy>=1.7', 'pandas>=1.5'],
      entry_points={
        'console_scripts': ['endslab = endslab.cli:main'],
        },
      classifiers=[
        'Development Status :: 4 - Beta',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Topic :: Scientific/Engineering :: Mathematics',
        ])
