from setuptools import find_packages, setup


with open('requirements.txt') as f:
    requirements = f.readlines()


setup(
    name='coalog',
    version='0.1.0',
    packages=find_packages(exclude=['tests']),
    install_requires=requirements,
    extras_require={
        'test': ['pytest'],
    },
    python_requires='>=3.8',
    entry_points={
        'console_scripts': [
            'coalog = coalog.main:main',
        ]
    }
)
