from setuptools import setup, find_packages

with open('requirements.txt') as f:
    requirements = f.read().splitlines()

with open('README.md') as f:
    long_description = f.read()

setup(
    name='HDenseFormer',
    version='0.1.0',
    python_requires='>=3.8',
    packages=find_packages(exclude=('tests', 'tests.*', 'examples', 'examples.*')),
    license='MIT',
    description='multimodal tumor segmentation with densely connected transformer embeddings, in numpy',
    long_description=long_description,
    long_description_content_type='text/markdown',
    install_requires=requirements,
    extras_require={
        'test': ['pytest'],
    },
    scripts=[
        'run_hdf.py',
    ],
    entry_points={
        'console_scripts': ['hdenseformer=hdenseformer.cli:main'],
    },
)
